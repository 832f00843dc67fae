from .observation import CurrentObservation, observe
from .encoder import CurrentFeatures, encode_current, init_encoder
