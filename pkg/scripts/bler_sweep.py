"""BLER and NMSE against rate R = M/N for the SC decoder and the baselines.

    python3 scripts/bler_sweep.py --n 9 --rho 0.2 --trials 500 --decoders sc,amp,bp --out results/sweep

Builds (or reuses) <out>_profile.json, then writes <out>.csv and, if
matplotlib is available, <out>.png.
"""

import argparse
import logging
import time
from pathlib import Path

from analog_polar.construction import build_profile, load_profile, save_profile
from analog_polar.harness import BASELINE_ROWS, ExperimentConfig, default_rates, run_sweep
from analog_polar.mixdist import SourceModel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=9)
    ap.add_argument("--rho", type=float, default=0.2)
    ap.add_argument("--sigma2", type=float, default=1.0)
    ap.add_argument("--construct-trials", type=int, default=1000)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rates", default=None, help="comma list; default 0.20:0.02:0.60")
    ap.add_argument("--decoders", default="sc,amp,bp")
    ap.add_argument("--baseline-rows", choices=BASELINE_ROWS, default="random")
    ap.add_argument("--out", default="results/sweep")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    prof_path = out.with_name(out.name + "_profile.json")
    src = SourceModel.bernoulli_gaussian(args.rho, args.sigma2)
    if prof_path.exists():
        profile = load_profile(prof_path)
    else:
        t0 = time.perf_counter()
        profile = build_profile(src, args.n, args.construct_trials, seed=args.seed)
        save_profile(profile, prof_path)
        print(f"profile built in {time.perf_counter() - t0:.0f} s -> {prof_path}")

    rates = default_rates() if args.rates is None else [float(r) for r in args.rates.split(",")]
    cfg = ExperimentConfig(n=args.n, rho=args.rho, sigma2=args.sigma2, rates=rates, trials=args.trials,
                           seed=args.seed, decoders=args.decoders.split(","),
                           baseline_rows=args.baseline_rows, out_path=str(out.with_suffix(".csv")))
    rows = run_sweep(cfg, profile, progress=lambda r: print(
        f"{r.decoder:>3} R={r.R:.2f} M={r.M:3d} bler={r.bler:.3f} nmse={r.nmse:.2e}"))

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    for dec in cfg.decoders:
        sel = [r for r in rows if r.decoder == dec]
        a.plot([r.R for r in sel], [r.bler for r in sel], "o-", ms=3, label=dec)
        b.semilogy([r.R for r in sel], [max(r.nmse, 1e-20) for r in sel], "o-", ms=3, label=dec)
    a.set_ylabel("BLER")
    b.set_ylabel("NMSE")
    for ax in (a, b):
        ax.set_xlabel("R = M/N")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out.with_suffix(".png"), dpi=120)


if __name__ == "__main__":
    main()
