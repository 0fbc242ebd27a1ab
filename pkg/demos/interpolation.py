"""Interpolation benchmark on a coarse truth, physics on versus off.

Every snapshot is in the training set; the scored nodes are truth-lattice
nodes, most of which lie between the GRID samples.

    python3 demos/interpolation.py
"""
import warnings

from physreg.bench import BenchConfig, run_interpolation
from physreg.physics import rds_model
from physreg.predictor import PredictorConfig
from physreg.simulator import SimConfig, sample_grid, simulate
from physreg.sqp import SolverConfig


def main():
    warnings.simplefilter("ignore", UserWarning)
    truth = simulate(SimConfig(grid_n=41, K=8))
    data = sample_grid(truth, 11)
    pde = rds_model(truth.params)
    bench = BenchConfig(score_nodes=60, seed=0)
    results = {}
    for physics in (True, False):
        cfg = PredictorConfig(solver=SolverConfig(physics=physics))
        results[physics] = run_interpolation(truth, data, pde, cfg, bench)
    print(" k'     t   physics on   physics off")
    on, off = results[True].curve, results[False].curve
    for k, t, a, b in zip(on.k_prime, on.t, on.error, off.error):
        print(f"{k:3d}  {t:4.1f}   {a:10.4f}   {b:11.4f}")
    for physics, res in results.items():
        print(f"physics {'on ' if physics else 'off'}: median {res.curve.median:.4f}, "
              f"{res.timing.per_query_mean_ms:.1f} ms/query, degraded {res.degraded_fraction:.1%}")


if __name__ == "__main__":
    main()
