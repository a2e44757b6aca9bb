"""Fit the three-component benchmark end to end at desk scale and dump the
plot-ready CSV outputs (density grid, posterior-K histogram, trace panel
inputs) next to this script.

Roughly two minutes of compute; pass --quick for a coarser run.
"""

import os
import sys

import numpy as np

import rgmix
from rgmix import diagnostics

quick = "--quick" in sys.argv
out_dir = os.path.join(os.path.dirname(__file__), "out_trimodal")
os.makedirs(out_dir, exist_ok=True)

data = rgmix.generate_synthetic("trimodal", 1000, seed=42)
rgmix.write_dataset(data, os.path.join(out_dir, "data.csv"))

config = rgmix.ModelConfig(
    spec=rgmix.RepulsionSpec(g0=10.0, tau=10.0),
    m=2,
    k_max=15,
    zk_mc=20_000 if quick else 100_000,
    ztilde_mc=200 if quick else 1000,
)
sweeps, burn = (500, 250) if quick else (1000, 500)
trace = rgmix.run_chain(data, config, sweeps, burn, seed=7)
trace.write_jsonl(os.path.join(out_dir, "trace.jsonl"))

freqs = rgmix.posterior_k_distribution(trace)
print("posterior K:", {k: round(v, 3) for k, v in sorted(freqs.items())})
print("log-CPO:", round(rgmix.log_cpo(trace, data), 2))
diagnostics.write_k_histogram_csv(freqs, os.path.join(out_dir, "k_hist.csv"))

axes = [np.linspace(-12, 12, 101)] * 2
grid = rgmix.predictive_density_grid(trace, axes, data_n=data.n)
diagnostics.write_grid_csv(grid, os.path.join(out_dir, "density_grid.csv"))
print("density grid mass:", round(grid.riemann_sum(), 4))
print("outputs in", out_dir)
print("render with: node frontend/dist/main.js contour --grid",
      f"{out_dir}/density_grid.csv --data {out_dir}/data.csv --out fig.svg")
