"""Horizontal (SNR) gap between two rate curves in a sweep CSV.

For each reference SNR s, finds the SNR at which ``--slow`` reaches the mean
rate that ``--fast`` attains at s, by linear interpolation in dB.

    python3 scripts/horizontal_gap.py results/fig3.csv --ns 1
"""

import argparse
import csv

import numpy as np


def curve(rows, method, ns):
    pts = sorted((float(r["snr_db"]), float(r["rate_mean"])) for r in rows
                 if r["method"] == method and int(r["ns"]) == ns)
    return np.array(pts).T


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--fast", default="sparse-hybrid")
    ap.add_argument("--slow", default="beam-steering")
    ap.add_argument("--ns", type=int, default=1)
    args = ap.parse_args()
    with open(args.csv) as fh:
        rows = list(csv.DictReader(fh))
    s_f, r_f = curve(rows, args.fast, args.ns)
    s_s, r_s = curve(rows, args.slow, args.ns)
    for s, r in zip(s_f, r_f):
        if r_s[0] <= r <= r_s[-1]:
            print(f"{s:6.1f} dB: gap {np.interp(r, r_s, s_s) - s:5.2f} dB")


if __name__ == "__main__":
    main()
