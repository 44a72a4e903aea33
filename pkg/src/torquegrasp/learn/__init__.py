from torquegrasp.learn.buffer import Batch, ReplayBuffer, RunningNorm
from torquegrasp.learn.nets import Adam, DenseNet, polyak
from torquegrasp.learn.sac import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    SAC,
    SQUASH_EPS,
    Policy,
    SacConfig,
    policy_sample,
    sac_from_dict,
    squash,
    squashed_log_density,
)

__all__ = [
    "Adam", "Batch", "DenseNet", "LOG_STD_MAX", "LOG_STD_MIN", "Policy", "ReplayBuffer",
    "RunningNorm", "SAC", "SQUASH_EPS", "SacConfig", "policy_sample", "polyak", "sac_from_dict",
    "squash", "squashed_log_density",
]
