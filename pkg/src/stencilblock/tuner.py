"""Design-space exploration: candidate enumeration, area gating, ranking, projection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .geometry import (
    BlockingConfig,
    Violation,
    errors,
    shift_register_size,
    validate_config,
)
from .model import DeviceSpec, PerfEstimate, estimate
from .stencils import SIZE_CELL, StencilSpec


class InfeasibleConfig(ValueError):
    pass


# DSPs per cell update, back-solved from published DSP utilisation of the
# best configurations (utilisation x DSP count / (par_vec x par_time),
# rounded).  Approximate: the percentages were printed to whole points.
# Stratix 10 entries reuse the Arria 10 figures (same DSP architecture).
DSP_PER_UPDATE = {
    "stratix-v-gx-a7": {"diffusion2d": 5, "hotspot2d": 4, "diffusion3d": 7, "hotspot3d": 8},
    "arria-10-gx-1150": {"diffusion2d": 5, "hotspot2d": 10, "diffusion3d": 7, "hotspot3d": 9},
    "stratix-10-gx-2800": {"diffusion2d": 5, "hotspot2d": 10, "diffusion3d": 7, "hotspot3d": 9},
    "stratix-10-mx-2100": {"diffusion2d": 5, "hotspot2d": 10, "diffusion3d": 7, "hotspot3d": 9},
}

# The power window only caches the centre value; counted at half a main window.
AUX_WINDOW_SHARE = 0.5


@dataclass(frozen=True)
class AreaParams:
    dsp_per_update: int
    sr_copies_per_read_buffer: float = 1.0
    bram_bits_per_block: int = 20480

    def __post_init__(self):
        if self.dsp_per_update < 1:
            raise ValueError("dsp_per_update must be >= 1")


def default_area(spec: StencilSpec, device: DeviceSpec) -> AreaParams:
    try:
        return AreaParams(DSP_PER_UPDATE[device.name][spec.name])
    except KeyError:
        raise ValueError(f"no default DSP cost for {spec.name} on {device.name}; "
                         "supply dsp_per_update explicitly") from None


@dataclass(frozen=True)
class SearchBounds:
    max_bsize: int
    max_par_vec: int
    max_par_time: int
    min_bsize: int = 16

    def __post_init__(self):
        if min(self.max_bsize, self.max_par_vec, self.max_par_time, self.min_bsize) < 1:
            raise ValueError("search bounds must be positive")


@dataclass
class Candidate:
    config: BlockingConfig
    estimate: PerfEstimate | None = None
    dsp_used: int = 0
    bram_bits_used: int = 0
    feasible: bool = True
    warnings: list[Violation] = field(default_factory=list)

    def dsp_pct(self, device: DeviceSpec) -> float:
        return 100.0 * self.dsp_used / device.dsp_count

    def bram_pct(self, device: DeviceSpec) -> float:
        return 100.0 * self.bram_bits_used / device.bram_bits


def _powers_of_two(lo: int, hi: int) -> list[int]:
    out, n = [], 1
    while n <= hi:
        if n >= lo:
            out.append(n)
        n *= 2
    return out


def par_time_values(max_par_time: int) -> list[int]:
    """1 and 2 (kept for exploring the alignment penalty), then multiples of four."""
    return [t for t in (1, 2) if t <= max_par_time] + list(range(4, max_par_time + 1, 4))


def enumerate_candidates(spec: StencilSpec, dims: Sequence[int], bounds: SearchBounds,
                         device: DeviceSpec | None = None,
                         area: AreaParams | None = None) -> list[BlockingConfig]:
    """All structurally valid configurations within ``bounds``.

    Ordered by (bsize, par_vec, par_time).  When both ``device`` and ``area``
    are given, configurations that cannot fit are dropped early.
    """
    out = []
    for bsize in _powers_of_two(bounds.min_bsize, bounds.max_bsize):
        for par_vec in _powers_of_two(1, min(bounds.max_par_vec, bsize)):
            for par_time in par_time_values(bounds.max_par_time):
                cfg = BlockingConfig(bsize, par_vec, par_time,
                                     bsize_y=bsize if spec.rank == 3 else None)
                if errors(validate_config(cfg, spec, dims)):
                    continue
                if device is not None and area is not None:
                    if not is_feasible(*estimate_area(cfg, spec, area), device):
                        continue
                out.append(cfg)
    return out


def estimate_area(config: BlockingConfig, spec: StencilSpec, area: AreaParams) -> tuple[int, int]:
    """``(dsp_used, bram_bits_used)``; the Block RAM figure is a heuristic."""
    dsp = config.par_vec * config.par_time * area.dsp_per_update
    bsizes = config.block_sizes(spec.rank)
    sr = shift_register_size(spec.rank, spec.rad, bsizes[0], bsizes[-1], config.par_vec)
    windows = 1.0 + (AUX_WINDOW_SHARE if spec.has_aux_grid else 0.0)
    bits = config.par_time * sr * 8 * SIZE_CELL * windows * area.sr_copies_per_read_buffer
    return dsp, int(round(bits))


def is_feasible(dsp_used: int, bram_bits_used: int, device: DeviceSpec) -> bool:
    return dsp_used <= device.dsp_count and bram_bits_used <= device.bram_bits


def evaluate(config: BlockingConfig, spec: StencilSpec, device: DeviceSpec, dims, iterations,
             f_max: float, area: AreaParams) -> Candidate:
    warnings = validate_config(config, spec, dims, device)
    dsp, bits = estimate_area(config, spec, area)
    return Candidate(
        config=config,
        estimate=estimate(spec, config, device, dims, iterations, f_max),
        dsp_used=dsp, bram_bits_used=bits,
        feasible=is_feasible(dsp, bits, device),
        warnings=[w for w in warnings if w.severity == "warning"],
    )


def rank_candidates(cands: Iterable[BlockingConfig | Candidate], spec: StencilSpec,
                    device: DeviceSpec, dims: Sequence[int], iterations: int,
                    f_max_assumed: float, area: AreaParams, k: int = 6) -> list[Candidate]:
    """Feasible candidates sorted by modelled throughput at one common ``f_max``.

    Ties go to the smaller par_vec, then the larger block.
    """
    if k <= 0:
        return []
    evaluated = []
    for c in cands:
        cfg = c.config if isinstance(c, Candidate) else c
        cand = evaluate(cfg, spec, device, dims, iterations, f_max_assumed, area)
        if cand.feasible:
            evaluated.append(cand)
    evaluated.sort(key=lambda c: (-c.estimate.eff_gbps, c.config.par_vec,
                                  -c.config.bsize_x, c.config.par_time))
    return evaluated[:k]


@dataclass(frozen=True)
class ProjectionSpec:
    device: DeviceSpec
    f_max_assumed: float   # Hz
    calibration: float
    iterations: int
    dims: tuple[int, ...]

    def __post_init__(self):
        if not 0 < self.calibration <= 1:
            raise ValueError(f"calibration must be in (0, 1], got {self.calibration}")


def default_calibration(spec: StencilSpec) -> float:
    return 0.8 if spec.rank == 2 else 0.6


@dataclass(frozen=True)
class Projection:
    estimate: PerfEstimate     # calibrated
    uncalibrated: PerfEstimate
    used_bandwidth: float      # GB/s, == th_mem
    used_bandwidth_pct: float  # of device peak
    dsp_used: int | None = None
    bram_bits_used: int | None = None


def project(spec: StencilSpec, proj: ProjectionSpec, config: BlockingConfig,
            area: AreaParams | None = None) -> Projection:
    """Calibrated estimate on a (future) device at an assumed ``f_max``.

    With ``area`` the configuration must fit the device
    (:class:`InfeasibleConfig` otherwise); Block RAM only counts as
    over-utilised beyond 100 % of the bits.
    """
    dsp = bits = None
    if area is not None:
        dsp, bits = estimate_area(config, spec, area)
        if not is_feasible(dsp, bits, proj.device):
            raise InfeasibleConfig(
                f"{config.to_dict()} needs {dsp} DSPs / {bits} bits; "
                f"{proj.device.name} has {proj.device.dsp_count} / {proj.device.bram_bits}"
            )
    raw = estimate(spec, config, proj.device, proj.dims, proj.iterations, proj.f_max_assumed)
    return Projection(
        estimate=raw.scaled(proj.calibration),
        uncalibrated=raw,
        used_bandwidth=raw.th_mem,
        used_bandwidth_pct=100.0 * raw.th_mem * 1e9 / proj.device.th_max,
        dsp_used=dsp, bram_bits_used=bits,
    )
