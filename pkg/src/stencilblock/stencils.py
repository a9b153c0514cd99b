"""Benchmark stencils and the naive reference solver.

Grids are stored as numpy ``float32`` arrays indexed ``[y, x]`` (2D) or
``[z, y, x]`` (3D), so the x index varies fastest in memory.  ``dims`` tuples
are always written x first: ``(dim_x, dim_y[, dim_z])``.

Neighbour names follow the usual compass convention::

    w = x - 1    e = x + 1
    n = y - 1    s = y + 1
    b = z - 1    a = z + 1

Out-of-bound neighbours fall back on the boundary cell itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

SIZE_CELL = 4
DTYPE = np.float32

_NEIGHBOURS = {2: ("c", "n", "s", "e", "w"), 3: ("c", "n", "s", "e", "w", "a", "b")}

# Coefficients each formula reads.  Anything else in the map is rejected.
_COEFFICIENTS = {
    "diffusion2d": ("c_c", "c_w", "c_e", "c_s", "c_n"),
    "diffusion3d": ("c_c", "c_w", "c_e", "c_s", "c_n", "c_b", "c_a"),
    "hotspot2d": ("sdc", "Rx_1", "Ry_1", "Rz_1", "temp_amb"),
    "hotspot3d": ("c_c", "c_n", "c_s", "c_e", "c_w", "c_a", "c_b", "sdc", "temp_amb"),
}


class StencilError(ValueError):
    pass


@dataclass(frozen=True)
class StencilSpec:
    name: str
    rank: int
    rad: int
    num_read: int
    num_write: int
    flop_pcu: int
    bytes_pcu: int
    coefficients: Mapping[str, float] = field(default_factory=dict)
    has_aux_grid: bool = False

    def __post_init__(self):
        if self.rank not in (2, 3):
            raise StencilError(f"rank must be 2 or 3, got {self.rank}")
        if self.rad < 1:
            raise StencilError(f"rad must be >= 1, got {self.rad}")
        if self.bytes_pcu != SIZE_CELL * (self.num_read + self.num_write):
            raise StencilError(
                f"bytes_pcu {self.bytes_pcu} != {SIZE_CELL} x (num_read + num_write)"
            )
        if self.name not in _COEFFICIENTS:
            raise StencilError(f"unknown stencil formula {self.name!r}")
        expected = set(_COEFFICIENTS[self.name])
        if set(self.coefficients) != expected:
            missing = sorted(expected - set(self.coefficients))
            extra = sorted(set(self.coefficients) - expected)
            raise StencilError(f"{self.name}: coefficient mismatch, missing={missing} extra={extra}")
        coeffs = {k: DTYPE(v) for k, v in self.coefficients.items()}
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def num_acc(self) -> int:
        return self.num_read + self.num_write

    def with_coefficients(self, **overrides) -> "StencilSpec":
        coeffs = dict(self.coefficients)
        coeffs.update(overrides)
        return StencilSpec(**{**self.to_dict(), "coefficients": coeffs})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rank": self.rank,
            "rad": self.rad,
            "num_read": self.num_read,
            "num_write": self.num_write,
            "flop_pcu": self.flop_pcu,
            "bytes_pcu": self.bytes_pcu,
            "coefficients": {k: float(v) for k, v in self.coefficients.items()},
            "has_aux_grid": self.has_aux_grid,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "StencilSpec":
        keys = {"name", "rank", "rad", "num_read", "num_write", "flop_pcu",
                "bytes_pcu", "coefficients", "has_aux_grid"}
        unknown = set(doc) - keys
        if unknown:
            raise StencilError(f"unknown stencil keys: {sorted(unknown)}")
        missing = keys - set(doc)
        if missing:
            raise StencilError(f"missing stencil keys: {sorted(missing)}")
        return cls(**doc)


def stencil_names() -> list[str]:
    root = resources.files("stencilblock") / "data" / "stencils"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_stencil(name_or_path: str | Path) -> StencilSpec:
    """Load a stencil from the shipped library by name, or from a JSON file."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    else:
        res = resources.files("stencilblock") / "data" / "stencils" / f"{name_or_path}.json"
        if not res.is_file():
            raise StencilError(f"no stencil named {name_or_path!r}; known: {stencil_names()}")
        text = res.read_text()
    return StencilSpec.from_dict(json.loads(text))


@dataclass
class Grid:
    """Dense single-precision grid; ``data`` is indexed ``[z, y, x]`` / ``[y, x]``."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=DTYPE)
        if self.data.ndim not in (2, 3) or min(self.data.shape) < 1:
            raise StencilError(f"grid must be 2D or 3D with all dims >= 1, got shape {self.data.shape}")

    @property
    def rank(self) -> int:
        return self.data.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape[::-1])

    @property
    def size_input(self) -> int:
        return int(self.data.size)

    @classmethod
    def zeros(cls, dims) -> "Grid":
        return cls(np.zeros(tuple(dims)[::-1], dtype=DTYPE))

    @classmethod
    def random(cls, dims, seed: int = 42) -> "Grid":
        """Uniform values in [0, 1), reproducible from ``seed``."""
        rng = np.random.default_rng(seed)
        return cls(rng.random(tuple(dims)[::-1], dtype=DTYPE))

    def copy(self) -> "Grid":
        return Grid(self.data.copy())

    def save(self, path: str | Path) -> None:
        """Write raw little-endian float32 to ``path`` and dims to ``path + '.json'``."""
        path = Path(path)
        self.data.astype("<f4").tofile(path)
        sidecar = {"dims": list(self.dims), "dtype": "float32", "byteorder": "little", "order": "x-fastest"}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Grid":
        path = Path(path)
        sidecar = json.loads(Path(str(path) + ".json").read_text())
        dims = tuple(int(d) for d in sidecar["dims"])
        raw = np.fromfile(path, dtype="<f4")
        if raw.size != int(np.prod(dims)):
            raise StencilError(f"{path}: {raw.size} cells on disk, sidecar says {dims}")
        return cls(raw.reshape(dims[::-1]).astype(DTYPE))


def clamp_index(i: int, dim: int) -> int:
    return min(max(i, 0), dim - 1)


def cell_update(spec: StencilSpec, vals: Mapping[str, np.ndarray], aux=None):
    """Apply one stencil formula to a neighbourhood.

    ``vals`` maps neighbour names (``c``, ``n``, ``s``, ``e``, ``w`` and, for
    3D, ``a``, ``b``) to float32 scalars or equally shaped arrays; ``aux`` is
    the power value for Hotspot.  Terms are evaluated strictly left to right
    as the formula is written, with every intermediate rounded to float32.
    """
    missing = [k for k in _NEIGHBOURS[spec.rank] if k not in vals]
    if missing:
        raise StencilError(f"{spec.name}: neighbourhood incomplete, missing {missing}")
    if spec.has_aux_grid and aux is None:
        raise StencilError(f"{spec.name} needs the power (aux) value")
    k = spec.coefficients
    v = {key: np.asarray(val, dtype=DTYPE) for key, val in vals.items()}
    c, n, s, e, w = v["c"], v["n"], v["s"], v["e"], v["w"]

    if spec.name == "diffusion2d":
        out = k["c_c"] * c + k["c_w"] * w + k["c_e"] * e + k["c_s"] * s + k["c_n"] * n
    elif spec.name == "diffusion3d":
        out = (k["c_c"] * c + k["c_w"] * w + k["c_e"] * e + k["c_s"] * s + k["c_n"] * n
               + k["c_b"] * v["b"] + k["c_a"] * v["a"])
    elif spec.name == "hotspot2d":
        p = np.asarray(aux, dtype=DTYPE)
        two = DTYPE(2.0)
        out = c + k["sdc"] * (p + (n + s - two * c) * k["Ry_1"]
                              + (e + w - two * c) * k["Rx_1"]
                              + (k["temp_amb"] - c) * k["Rz_1"])
    else:  # hotspot3d
        p = np.asarray(aux, dtype=DTYPE)
        out = (c * k["c_c"] + n * k["c_n"] + s * k["c_s"] + e * k["c_e"] + w * k["c_w"]
               + v["a"] * k["c_a"] + v["b"] * k["c_b"] + k["sdc"] * p + k["c_a"] * k["temp_amb"])
    return out.astype(DTYPE, copy=False)


def _shifted(padded: np.ndarray, axis: int, offset: int) -> np.ndarray:
    # padded carries one edge-replicated layer on every side
    sl = [slice(1, -1)] * padded.ndim
    sl[axis] = slice(1 + offset, padded.shape[axis] - 1 + offset)
    return padded[tuple(sl)]


def neighbourhood(data: np.ndarray) -> dict[str, np.ndarray]:
    """Clamped rad-1 neighbour views of a whole grid array."""
    p = np.pad(data, 1, mode="edge")
    x, y = data.ndim - 1, data.ndim - 2
    vals = {
        "c": data,
        "w": _shifted(p, x, -1), "e": _shifted(p, x, +1),
        "n": _shifted(p, y, -1), "s": _shifted(p, y, +1),
    }
    if data.ndim == 3:
        vals["b"] = _shifted(p, 0, -1)
        vals["a"] = _shifted(p, 0, +1)
    return vals


def _check(spec: StencilSpec, grid: Grid, aux: Grid | None):
    if grid.rank != spec.rank:
        raise StencilError(f"{spec.name} is {spec.rank}D but the grid is {grid.rank}D")
    if spec.rad != 1:
        raise StencilError("only radius-1 formulas are implemented")
    if spec.has_aux_grid:
        if aux is None:
            raise StencilError(f"{spec.name} needs a power grid")
        if aux.dims != grid.dims:
            raise StencilError(f"aux dims {aux.dims} != grid dims {grid.dims}")


def reference_step(spec: StencilSpec, grid: Grid, aux: Grid | None = None) -> Grid:
    """One naive time-step; reads ``grid`` and returns a freshly allocated grid."""
    _check(spec, grid, aux)
    out = cell_update(spec, neighbourhood(grid.data), aux.data if spec.has_aux_grid else None)
    return Grid(out)


def reference_run(spec: StencilSpec, grid: Grid, aux: Grid | None = None, iterations: int = 1) -> Grid:
    if iterations < 0:
        raise StencilError(f"iterations must be >= 0, got {iterations}")
    _check(spec, grid, aux)
    cur = grid.copy()
    for _ in range(iterations):
        cur = reference_step(spec, cur, aux)
    return cur
