"""Experiment files: strict JSON parsing and validation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .geometry import BlockingConfig, errors, validate_config
from .model import DeviceSpec, load_device
from .stencils import StencilError, StencilSpec, load_stencil
from .tuner import AreaParams, SearchBounds

KEYS = {
    "description", "stencil", "device", "config", "search", "dims", "iter", "f_max",
    "area", "calibration", "dry_run", "verify", "seed", "k", "measured_gbps",
    "grid", "aux_grid",
}


class ExperimentParseError(ValueError):
    """Unreadable or non-JSON experiment file (exit code 2)."""


class ExperimentValidationError(ValueError):
    """Well-formed JSON that does not describe a valid experiment (exit code 3)."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class Experiment:
    stencil: StencilSpec
    device: DeviceSpec
    dims: tuple[int, ...]
    iterations: int
    config: BlockingConfig | None = None
    search: SearchBounds | None = None
    f_max_mhz: float | None = None
    area: AreaParams | None = None
    calibration: float | None = None
    dry_run: bool = False
    verify: bool = False
    seed: int = 42
    k: int = 6
    measured_gbps: float | None = None
    grid: str | None = None
    aux_grid: str | None = None
    description: str = ""

    @property
    def f_max(self) -> float | None:
        """Frequency in Hz, or None to use the device default."""
        return None if self.f_max_mhz is None else self.f_max_mhz * 1e6

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"description": self.description,
                             "stencil": self.stencil.to_dict(),
                             "device": self.device.to_dict(),
                             "dims": list(self.dims), "iter": self.iterations}
        if self.config is not None:
            d["config"] = self.config.to_dict()
        if self.search is not None:
            s = self.search
            d["search"] = {"max_bsize": s.max_bsize, "max_par_vec": s.max_par_vec,
                           "max_par_time": s.max_par_time, "min_bsize": s.min_bsize}
        if self.area is not None:
            a = self.area
            d["area"] = {"dsp_per_update": a.dsp_per_update,
                         "sr_copies_per_read_buffer": a.sr_copies_per_read_buffer,
                         "bram_bits_per_block": a.bram_bits_per_block}
        for key, val in (("f_max", self.f_max_mhz), ("calibration", self.calibration),
                         ("measured_gbps", self.measured_gbps), ("grid", self.grid),
                         ("aux_grid", self.aux_grid)):
            if val is not None:
                d[key] = val
        d.update(dry_run=self.dry_run, verify=self.verify, seed=self.seed, k=self.k)
        return d


def fixture_names() -> list[str]:
    root = resources.files("stencilblock") / "data" / "experiments"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read(path_or_name) -> tuple[str, Path | None]:
    path = Path(path_or_name)
    if path.exists():
        return path.read_text(), path
    res = resources.files("stencilblock") / "data" / "experiments" / f"{path_or_name}.json"
    if res.is_file():
        return res.read_text(), None
    raise ExperimentParseError(f"{path_or_name}: no such file or shipped experiment")


def _positive(problems, name, val, kind=(int, float)):
    if isinstance(val, bool) or not isinstance(val, kind) or val <= 0:
        problems.append(f"{name}: must be a positive number, got {val!r}")
        return False
    return True


def _strict(problems, name, doc, allowed):
    if not isinstance(doc, dict):
        problems.append(f"{name}: must be an object")
        return False
    unknown = sorted(set(doc) - allowed)
    for key in unknown:
        problems.append(f"{name}.{key}: unknown key")
    return not unknown


def parse_experiment(path_or_name) -> Experiment:
    """Load an experiment file (or a JSON report that embeds one)."""
    text, path = _read(path_or_name)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExperimentParseError(f"{path_or_name}: not valid JSON ({exc})") from None
    if isinstance(doc, dict) and "experiment" in doc and "results" in doc:
        doc = doc["experiment"]
    return experiment_from_dict(doc, base=path.parent if path else None)


def experiment_from_dict(doc, base: Path | None = None) -> Experiment:
    if not isinstance(doc, dict):
        raise ExperimentParseError("experiment must be a JSON object")
    problems: list[str] = []
    for key in sorted(set(doc) - KEYS):
        problems.append(f"{key}: unknown key")
    for key in ("stencil", "device", "dims", "iter"):
        if key not in doc:
            problems.append(f"{key}: required")
    if problems:
        raise ExperimentValidationError(problems)

    try:
        st = doc["stencil"]
        stencil = StencilSpec.from_dict(st) if isinstance(st, dict) else load_stencil(st)
    except (StencilError, TypeError) as exc:
        raise ExperimentValidationError([f"stencil: {exc}"]) from None
    try:
        dv = doc["device"]
        device = DeviceSpec.from_dict(dv) if isinstance(dv, dict) else load_device(dv)
    except (ValueError, TypeError) as exc:
        raise ExperimentValidationError([f"device: {exc}"]) from None

    dims = doc["dims"]
    if isinstance(dims, int) and not isinstance(dims, bool):
        dims = [dims] * stencil.rank
    if not isinstance(dims, list) or len(dims) != stencil.rank:
        problems.append(f"dims: need {stencil.rank} values for {stencil.name}, got {doc['dims']!r}")
        dims = None
    else:
        for i, d in enumerate(dims):
            _positive(problems, f"dims[{i}]", d, int)
    _positive(problems, "iter", doc["iter"], int)

    config = None
    if "config" in doc:
        c = doc["config"]
        if _strict(problems, "config", c, {"bsize_x", "bsize_y", "par_vec", "par_time"}):
            ok = all(_positive(problems, f"config.{key}", c.get(key), int)
                     for key in ("bsize_x", "par_vec", "par_time"))
            if "bsize_y" in c:
                ok = _positive(problems, "config.bsize_y", c["bsize_y"], int) and ok
            if ok:
                config = BlockingConfig(c["bsize_x"], c["par_vec"], c["par_time"], c.get("bsize_y"))
                for v in errors(validate_config(config, stencil, dims if dims and not problems else None)):
                    problems.append(f"config: [{v.rule}] {v.message}")

    search = None
    if "search" in doc:
        s = doc["search"]
        if _strict(problems, "search", s, {"max_bsize", "max_par_vec", "max_par_time", "min_bsize"}):
            if all(_positive(problems, f"search.{key}", s.get(key, 16 if key == "min_bsize" else None), int)
                   for key in ("max_bsize", "max_par_vec", "max_par_time", "min_bsize")):
                search = SearchBounds(**s)
    if config is None and search is None and not problems:
        problems.append("config: either config or search is required")

    area = None
    if "area" in doc:
        a = doc["area"]
        if _strict(problems, "area", a, {"dsp_per_update", "sr_copies_per_read_buffer", "bram_bits_per_block"}):
            if _positive(problems, "area.dsp_per_update", a.get("dsp_per_update"), int):
                for key in ("sr_copies_per_read_buffer", "bram_bits_per_block"):
                    if key in a:
                        _positive(problems, f"area.{key}", a[key])
                area = AreaParams(**a)

    for key in ("f_max", "measured_gbps"):
        if key in doc:
            _positive(problems, key, doc[key])
    if "calibration" in doc:
        cal = doc["calibration"]
        if isinstance(cal, bool) or not isinstance(cal, (int, float)) or not 0 < cal <= 1:
            problems.append(f"calibration: must be in (0, 1], got {cal!r}")
    for key in ("dry_run", "verify"):
        if key in doc and not isinstance(doc[key], bool):
            problems.append(f"{key}: must be true or false")
    if "seed" in doc and (isinstance(doc["seed"], bool) or not isinstance(doc["seed"], int) or doc["seed"] < 0):
        problems.append(f"seed: must be a non-negative integer, got {doc['seed']!r}")
    if "k" in doc:
        _positive(problems, "k", doc["k"], int)
    for key in ("grid", "aux_grid", "description"):
        if key in doc and not isinstance(doc[key], str):
            problems.append(f"{key}: must be a string")
    if problems:
        raise ExperimentValidationError(problems)

    def resolve(p):
        if p is None or base is None or Path(p).is_absolute():
            return p
        return str(base / p)

    return Experiment(
        stencil=stencil, device=device, dims=tuple(dims), iterations=doc["iter"],
        config=config, search=search,
        f_max_mhz=float(doc["f_max"]) if "f_max" in doc else None,
        area=area,
        calibration=float(doc["calibration"]) if "calibration" in doc else None,
        dry_run=doc.get("dry_run", False), verify=doc.get("verify", False),
        seed=doc.get("seed", 42), k=doc.get("k", 6),
        measured_gbps=float(doc["measured_gbps"]) if "measured_gbps" in doc else None,
        grid=resolve(doc.get("grid")), aux_grid=resolve(doc.get("aux_grid")),
        description=doc.get("description", ""),
    )

