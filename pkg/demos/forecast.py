"""Forecast error surface: start index against horizon.

For each start index the predictor sees snapshots up to that index only and
extrapolates forward in time.

    python3 demos/forecast.py
"""
import warnings

from physreg.bench import BenchConfig, horizon_monotone_fraction, run_forecast, smoother_ic_fraction
from physreg.physics import rds_model
from physreg.simulator import SimConfig, sample_grid, simulate


def main():
    warnings.simplefilter("ignore", UserWarning)
    truth = simulate(SimConfig(grid_n=41, K=8))
    data = sample_grid(truth, 11)
    res = run_forecast(truth, data, [0, 2, 4, 6], rds_model(truth.params), bench=BenchConfig(40, 0))
    print("start  horizon errors")
    for c in res.curves:
        print(f"{c.k_start:5d}  " + "  ".join(f"{e:.4f}" for e in c.error))
    print(f"later start beats earlier start: {smoother_ic_fraction(res.curves):.0%} of comparable cells")
    print(f"error grows with horizon:        {horizon_monotone_fraction(res.curves):.0%} of steps")


if __name__ == "__main__":
    main()
