"""Bits per OFDM symbol versus cluster size for every scenario in a config.

    python scripts/run_tables.py [--config configs/feedback_tables.ini] [--out results/feedback_tables]

Prints one table per scenario and mode and writes the usual CSV/JSON/PNG outputs.
"""
import argparse
import time
from pathlib import Path

from diffbeam.harness import emit_outputs, load_config, run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "feedback_tables.ini")
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "feedback_tables")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--trials", type=int, help="override trial count")
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.trials:
        cfg.trials = args.trials
    start = time.perf_counter()
    report = run_experiment(cfg, threads=args.threads)
    emit_outputs(report, args.out)

    for sc in cfg.scenarios:
        for mode in sc.modes:
            print(f"\n{sc.name} ({mode})")
            print(f"{'G':>4} {'baseline':>9} {'frozen':>9} {'adaptive':>9} {'entropy':>9} {'switch':>7}")
            for g in cfg.cluster_sizes:
                r = report.row(sc.name, g, mode)
                sw = "-" if r.switching_rate is None else f"{r.switching_rate:.3f}"
                print(f"{g:>4} {r.baseline_bits:>9} {r.huffman_bits_frozen:>9.1f} "
                      f"{r.huffman_bits_adaptive:>9.1f} {r.entropy:>9.1f} {sw:>7}")
    print(f"\n{time.perf_counter() - start:.1f} s; outputs in {args.out}")


if __name__ == "__main__":
    main()
