"""Block-cyclic stochastic coordinate descent and its baseline optimizers."""

from ._kernels import BACKEND
from .data import Dataset, corrupt_labels, load_idx, subset, synth_blobs, to_dataset, write_idx
from .errors import (
    BatchError,
    BCSCError,
    ConfigError,
    DivergenceError,
    IdxFormatError,
    PartitionError,
    ScheduleError,
)
from .harness import ExperimentConfig, MetricsRow, compare, emit_csv, read_csv, run_experiment, summarize
from .models import CountingOracle, LogisticOracle, MLPOracle, evaluate, finite_diff_grad
from .numerics import RngStream, derive_stream, shuffle_indices
from .optim import (
    OptimizerConfig,
    OptimizerState,
    Schedule,
    bcd_epoch,
    bcsc_epoch,
    coordinate_step,
    lr_at,
    rbc_epoch,
    run_epoch,
    sbc_epoch,
    sgd_epoch,
)
from .partition import BlockPartition, apply_block_update, block_coords, make_partition
from .scheduler import EpochPlan, make_epoch_plan, next_batch

__version__ = "0.1.0"
