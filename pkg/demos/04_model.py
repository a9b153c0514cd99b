"""Analytical throughput estimates and the sensitivity to f_max and par_time."""
import numpy as np

from stencilblock import BlockingConfig, estimate, load_device, load_stencil
from stencilblock.model import model_accuracy

dev = load_device("arria-10-gx-1150")
spec = load_stencil("diffusion2d")
dims = (16096, 16096)

est = estimate(spec, BlockingConfig(4096, 8, 36), dev, dims, 1000, f_max=343.76e6)
print("%.3f GB/s  %.3f GFLOP/s  %.3f GCell/s" % (est.eff_gbps, est.gflops, est.gcells))
print("th_mem %.5f GB/s over %d passes, %.5f s" % (est.th_mem, est.passes, est.run_time))
print("accuracy against a measured 673.959 GB/s: %.1f%%" % (100 * model_accuracy(673.959, est.eff_gbps)))

# once th_mem hits the device peak a higher clock stops helping
for f in np.linspace(150e6, 400e6, 6):
    e16 = estimate(spec, BlockingConfig(4096, 16, 16), dev, dims, 1000, f)
    e8 = estimate(spec, BlockingConfig(4096, 8, 36), dev, dims, 1000, f)
    print(f"{f / 1e6:6.1f} MHz   pv16/pt16 {e16.eff_gbps:8.3f}   pv8/pt36 {e8.eff_gbps:8.3f}")
