"""Reference solvers for the four shipped stencils."""
import numpy as np

from stencilblock import Grid, load_stencil, reference_run
from stencilblock.stencils import stencil_names

print(stencil_names())

# A hot square in the middle of a cold plate
spec = load_stencil("diffusion2d")
g = Grid.zeros((32, 32))
g.data[12:20, 12:20] = 1.0
out = reference_run(spec, g, iterations=50)

# coefficients sum to one and edges clamp, so total heat is (nearly) conserved
print("heat before %.4f after %.4f" % (g.data.sum(), out.data.sum()))
print("peak %.4f" % out.data.max())

# Hotspot needs a power map next to the temperature grid
hs = load_stencil("hotspot3d")
temp = Grid(np.full((8, 16, 16), 80.0, dtype=np.float32))
power = Grid.random((16, 16, 8), seed=1)
after = reference_run(hs, temp, power, iterations=10)
print("hotspot3d mean temperature %.5f" % after.data.mean())

# per-update characteristics
for name in stencil_names():
    s = load_stencil(name)
    print(f"{name:12s} rank {s.rank} reads {s.num_read} flop/cell {s.flop_pcu} bytes/cell {s.bytes_pcu}")
