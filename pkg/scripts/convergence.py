"""Adaptive feedback bits versus OFDM symbol index, pooled against per-index.

    python scripts/convergence.py [--symbols 100] [--trials 20] [--out results/convergence]

Runs G = 1 on the low/no-spatial and high/spatial scenarios with paired
seeds and prints the steady-state symbol of each curve.
"""
import argparse
from pathlib import Path

from diffbeam.feedback import PER_INDEX, POOLED
from diffbeam.harness import ExperimentConfig, Scenario, convergence_curve, emit_outputs, run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--symbols", type=int, default=100)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "convergence")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        scenarios=[
            Scenario("low", "low", "none", (POOLED, PER_INDEX)),
            Scenario("high-spatial", "high", "macrocell", (POOLED, PER_INDEX)),
        ],
        cluster_sizes=(1,),
        symbols=args.symbols,
        trials=args.trials,
        seed=args.seed,
    )
    report = run_experiment(cfg, threads=args.threads)
    emit_outputs(report, args.out)
    for name, _, mode in report.convergence:
        t, curve, steady = convergence_curve(report, name, 1, mode)
        print(f"{name:>13} {mode:>9}: t=1 {curve[0]:.0f} bits, final-10 mean {curve[-10:].mean():.1f}, "
              f"steady state at t={steady}")


if __name__ == "__main__":
    main()
