from .schedule import DenoiseSchedule, ScheduleShape, noise_sigma
from .encoder import PATCH, WM_CHANNELS, encode_grid, init_grid_encoder, patchify, unpatchify
from .features import CONDITION_SIZE, ConditionLatent, FutureFeatures
from .simple import LearnedWM, SimpleWMSample, simple_wm_fit, simple_wm_mse
from .model import WMKind, WorldModel, imagine_future
