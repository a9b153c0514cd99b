"""Functional emulation, analytical modelling and design-space exploration of
a spatially and temporally blocked stencil accelerator."""

from .emulator import EmulationCounters, collapsed_iteration_count, emulate, emulate_block, valid_region
from .geometry import (
    BlockingConfig,
    InvalidConfig,
    alignment_plan,
    read_write_volumes,
    tiling_geometry,
    validate_config,
)
from .model import DeviceSpec, PerfEstimate, estimate, load_device, model_accuracy
from .stencils import Grid, StencilSpec, load_stencil, reference_run, reference_step
from .tuner import AreaParams, ProjectionSpec, SearchBounds, enumerate_candidates, project, rank_candidates

__version__ = "0.1.0"
