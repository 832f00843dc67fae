from .config import TrainConfig, load_train_config
from .losses import LossBreakdown, combine, loss_bev, loss_traj, total_loss, winner_mode
from .dataset import TrainingSample, build_sample, build_samples
from .bev_head import bev_logits, init_bev_head
from .trainer import (
    LOG_COLUMNS, TrainResult, attach_phase2, build_store, evaluate_losses, noise_stream, sample_loss,
    train_phase1, train_phase2,
)
