"""Analytical performance model for the blocked stencil accelerator.

The computation is assumed memory-bound with latency hidden by the deep
pipeline.  Memory throughput scales with ``f_max`` and ``par_vec`` until the
device peak; run time is the external traffic of all passes divided by that
throughput; effective throughput is the traffic the same number of
iterations would have needed without temporal blocking, per second of
modelled run time.  All throughput numbers are in GB/s = 1e9 B/s.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .geometry import BlockingConfig, require_valid, tiling_geometry
from .stencils import SIZE_CELL, StencilSpec


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    f_max_default: float   # Hz
    th_max: float          # bytes/s
    dsp_count: int
    bram_bits: int
    bram_blocks: int
    align_width: int = 512

    def __post_init__(self):
        if self.th_max <= 0 or self.f_max_default <= 0:
            raise ValueError(f"{self.name}: th_max and f_max_default must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DeviceSpec":
        known = {"name", "f_max_default", "th_max", "dsp_count", "bram_bits", "bram_blocks", "align_width"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown device keys: {sorted(unknown)}")
        return cls(**doc)


def device_names() -> list[str]:
    root = resources.files("stencilblock") / "data" / "devices"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_device(name_or_path: str | Path) -> DeviceSpec:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return DeviceSpec.from_dict(json.loads(path.read_text()))
    res = resources.files("stencilblock") / "data" / "devices" / f"{name_or_path}.json"
    if not res.is_file():
        raise ValueError(f"no device named {name_or_path!r}; known: {device_names()}")
    return DeviceSpec.from_dict(json.loads(res.read_text()))


@dataclass(frozen=True)
class PerfEstimate:
    th_mem: float      # GB/s
    passes: int
    run_time: float    # s
    eff_gbps: float
    gflops: float
    gcells: float
    t_read: int
    t_write: int
    f_max: float       # Hz, the frequency the estimate was made at
    calibrated: float | None = None

    def scaled(self, factor: float) -> "PerfEstimate":
        return PerfEstimate(
            th_mem=self.th_mem, passes=self.passes, run_time=self.run_time,
            eff_gbps=self.eff_gbps * factor, gflops=self.gflops * factor,
            gcells=self.gcells * factor, t_read=self.t_read, t_write=self.t_write,
            f_max=self.f_max, calibrated=factor,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def memory_throughput(f_max: float, par_vec: int, size_cell: int, num_acc: int, th_max: float) -> float:
    """Sustained external memory throughput in GB/s."""
    return min(f_max * par_vec * size_cell * num_acc / 1e9, th_max / 1e9)


def pass_count(iterations: int, par_time: int) -> int:
    return -(-iterations // par_time)


def run_time(iterations, par_time, t_read, t_write, size_cell, th_mem) -> float:
    if th_mem <= 0:
        raise ValueError("th_mem must be positive")
    return pass_count(iterations, par_time) * (t_read + t_write) * size_cell / (1e9 * th_mem)


def effective_throughput(iterations, size_input, num_acc, size_cell, run_time) -> float:
    """Traffic an unblocked run would need, per second of modelled run time (GB/s)."""
    if run_time <= 0:
        raise ValueError("run_time must be positive to define a throughput")
    return iterations * size_input * num_acc * size_cell / (1e9 * run_time)


def convert_units(gbps: float, spec: StencilSpec) -> tuple[float, float]:
    """GB/s to ``(GFLOP/s, GCell/s)`` through the stencil's bytes and FLOP per cell update."""
    gcells = gbps / spec.bytes_pcu
    return gcells * spec.flop_pcu, gcells


def estimate(spec: StencilSpec, config: BlockingConfig, device: DeviceSpec, dims: Sequence[int],
             iterations: int, f_max: float | None = None) -> PerfEstimate:
    """Compose geometry and throughput into one estimate; ``f_max`` in Hz."""
    require_valid(config, spec, dims)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    f = device.f_max_default if f_max is None else f_max
    geom = tiling_geometry(dims, spec, config)
    th = memory_throughput(f, config.par_vec, SIZE_CELL, spec.num_acc, device.th_max)
    rt = run_time(iterations, config.par_time, geom.t_read, geom.t_write, SIZE_CELL, th)
    eff = effective_throughput(iterations, geom.size_input, spec.num_acc, SIZE_CELL, rt)
    gflops, gcells = convert_units(eff, spec)
    return PerfEstimate(
        th_mem=th, passes=pass_count(iterations, config.par_time), run_time=rt,
        eff_gbps=eff, gflops=gflops, gcells=gcells,
        t_read=geom.t_read, t_write=geom.t_write, f_max=f,
    )


def model_accuracy(measured_gbps: float, estimated_gbps: float) -> float:
    if estimated_gbps <= 0:
        raise ValueError("estimated throughput must be positive")
    return measured_gbps / estimated_gbps
