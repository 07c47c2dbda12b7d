"""Run the named figure reproductions and print a short summary of each CSV.

    python3 scripts/reproduce_figures.py fig2 fig5 --trials 100 --threads 4
"""

import argparse
import csv

from mmwave_hybrid.experiments import EXPERIMENTS, run_named_experiment


def summarize(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "method" not in rows[0]:
        return
    print(f"\n{path}")
    for r in rows:
        extra = "".join(f" {k}={r[k]}" for k in ("spread_deg", "angle_bits") if r.get(k))
        print(f"  {r['method']:<24} snr={float(r['snr_db']):>6.1f} ns={r['ns']}{extra}"
              f"  mean={float(r['rate_mean']):7.3f} +/- {float(r['rate_ci95']):.3f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", default=[e for e in EXPERIMENTS])
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    for name in args.names:
        for path in run_named_experiment(name, args.out, args.seed, args.trials, args.threads):
            if name != "beampattern":
                summarize(path)


if __name__ == "__main__":
    main()
