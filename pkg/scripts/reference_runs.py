#!/usr/bin/env python3
"""Produce the reference run directories consumed by the plotting front end.

Creates, under runs/ (or the first argument):
  * three EIT scans (N_c = 1e3, 1e4, 5e4) for the linewidth-narrowing figure,
  * two ring-down runs (kappa_t/2pi = 0.5 and 0.05 MHz at N_c = 1e3, 5e4),
  * one VRS scan pair (N_c = 5e4, 1e6).
"""

import sys
from pathlib import Path

from cavimol.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(outdir: str):
    jobs = []
    for n_c in ("1e3", "1e4", "5e4"):
        jobs.append(["eit-scan", str(CONFIGS / "eit_base.ini"),
                     "--set", f"ensemble.n_c={n_c}", "--outdir", outdir])
    for kappa, n_c in (("0.5e6", "1e3"), ("0.5e6", "5e4"),
                       ("0.05e6", "1e3"), ("0.05e6", "5e4")):
        jobs.append(["ringdown", str(CONFIGS / "ringdown_base.ini"),
                     "--set", f"cavity.kappa_t_hz={kappa}",
                     "--set", f"ensemble.n_c={n_c}", "--outdir", outdir])
    for n_c in ("5e4", "1e6"):
        jobs.append(["vrs-scan", str(CONFIGS / "vrs_base.ini"),
                     "--set", f"ensemble.n_c={n_c}", "--outdir", outdir])
    for argv in jobs:
        code = main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "runs"))
