"""Command-line entry point.

Subcommands: construct, simulate, polarize, encode, decode, diag chain-rule.
Failures print a single ``error: <kind>: <message>`` line to stderr and exit
nonzero (2 for usage errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import amp_decode, bp_decode
from .codec import encode, ls_fallback, sc_decode
from .construction import (ProfileFormatError, build_profile, load_profile,
                           measurements_for_rate, save_profile)
from .harness import (DECODERS, BASELINE_ROWS, ExperimentConfig, MissingProfileError,
                      chain_rule_cases, chain_rule_check, default_rates, polarization_report,
                      run_sweep)
from .mixdist import DEFAULT_POLICY, PrunePolicy, SourceModel
from .rng import stream

log = logging.getLogger("analog_polar")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _rates(text: str):
    try:
        return tuple(float(r) for r in text.split(",") if r.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate list {text!r}")


def _decoders(text: str):
    names = tuple(d.strip() for d in text.split(",") if d.strip())
    bad = [d for d in names if d not in DECODERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown decoders {bad}; choose from {','.join(DECODERS)}")
    return names


def _policy(args) -> PrunePolicy:
    return PrunePolicy(DEFAULT_POLICY.eps_atom, DEFAULT_POLICY.eps_w, args.k_max, args.g_max)


def read_signal(path, fmt: str) -> np.ndarray:
    if fmt == "f64le":
        raw = Path(path).read_bytes()
        if len(raw) % 8:
            raise ValueError(f"{path}: length {len(raw)} is not a multiple of 8 bytes")
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: not a number: {line!r}") from None
    return np.array(values, dtype=np.float64)


def write_signal(path, x, fmt: str) -> None:
    x = np.asarray(x, dtype=np.float64)
    if fmt == "f64le":
        Path(path).write_bytes(x.astype("<f8").tobytes())
    else:
        Path(path).write_text("".join(f"{v!r}\n" for v in x.tolist()))


def _progress(label):
    def report(done, total):
        if done == total or done % max(1, total // 10) == 0:
            log.info("%s: %d/%d", label, done, total)
    return report


def cmd_construct(args) -> None:
    source = SourceModel.bernoulli_gaussian(args.rho, args.sigma2)
    profile = build_profile(source, args.n, args.trials, args.seed, _policy(args),
                            progress=_progress("construct"))
    save_profile(profile, args.out)


def cmd_simulate(args) -> None:
    profile = load_profile(args.profile) if Path(args.profile).exists() else None
    if profile is None:
        raise MissingProfileError(f"profile {args.profile!r} not found; run `analog-polar construct` first")
    rho = float(profile.source.params.get("rho", 0.0))
    sigma2 = float(profile.source.params.get("sigma2", 1.0))
    cfg = ExperimentConfig(
        n=profile.n, rho=rho, sigma2=sigma2, rates=args.rates, trials=args.trials,
        seed=args.seed, decoders=args.decoders, policy=profile.policy, eta=args.eta,
        profile_path=args.profile, out_path=args.out, baseline_rows=args.baseline_rows,
        timing=args.timing,
    )
    run_sweep(cfg, profile, progress=lambda row: log.info(
        "%s R=%.2f bler=%.4f nmse=%.3g", row.decoder, row.R, row.bler, row.nmse))


def cmd_polarize(args) -> None:
    source = SourceModel.bernoulli_gaussian(args.rho, args.sigma2)
    polarization_report(source, args.n, args.trials, args.seed, _policy(args), args.out,
                        progress=_progress("polarize"))


def _rows_for(profile, args):
    M = measurements_for_rate(args.rate, profile.N) if args.m is None else args.m
    return profile.reserved(M)


def cmd_encode(args) -> None:
    profile = load_profile(args.profile)
    x = read_signal(args.input, args.format)
    if x.size != profile.N:
        raise ValueError(f"signal has length {x.size}, profile expects {profile.N}")
    write_signal(args.out, encode(x, _rows_for(profile, args)), args.format)


def cmd_decode(args) -> None:
    profile = load_profile(args.profile)
    A = _rows_for(profile, args)
    z = read_signal(args.input, args.format)
    if z.size != A.size:
        raise ValueError(f"measurement has length {z.size}, reserved set has {A.size} rows")
    N = profile.N
    if args.decoder == "sc":
        res = sc_decode(z, A, profile.source, N, profile.policy)
        if not res.ok:
            log.warning("sc decoding %s at index %s; least-squares estimate written",
                        res.status, res.failed_index)
        x_hat = res.x_hat
    elif args.decoder == "ls":
        x_hat = ls_fallback(z, A, N)
    elif args.decoder == "amp":
        x_hat = amp_decode(z, A, profile.source, N, rng=stream(args.seed, "amp", 0)).x_hat
    else:
        x_hat = bp_decode(z, A, N).x_hat
    write_signal(args.out, x_hat, args.format)


def cmd_diag(args) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "residual_bits"])
    for name, (P1, P2) in chain_rule_cases().items():
        w.writerow([name, f"{chain_rule_check(P1, P2):.3e}"])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="analog-polar", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source_args(sp, trials):
        sp.add_argument("--n", type=int, default=9, help="log2 of the blocklength")
        sp.add_argument("--rho", type=float, default=0.2, help="Bernoulli-Gaussian nonzero probability")
        sp.add_argument("--sigma2", type=float, default=1.0, help="variance of the nonzero entries")
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--k-max", type=int, default=DEFAULT_POLICY.k_max, help="atom cap per law")
        sp.add_argument("--g-max", type=int, default=DEFAULT_POLICY.g_max, help="Gaussian cap per law")

    sp = sub.add_parser("construct", help="estimate the error profile and save it as JSON")
    source_args(sp, 1000)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("simulate", help="BLER/NMSE sweep over rates and decoders")
    sp.add_argument("--profile", required=True)
    sp.add_argument("--rates", type=_rates, default=default_rates(), help="comma-separated rates")
    sp.add_argument("--decoders", type=_decoders, default=("sc",), help="subset of sc,amp,bp,ls")
    sp.add_argument("--trials", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--eta", type=float, default=1e-2, help="block error tolerance")
    sp.add_argument("--baseline-rows", choices=BASELINE_ROWS, default="random")
    sp.add_argument("--timing", action="store_true", help="fill runtime_ms (makes output non-reproducible)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("polarize", help="per-index error probabilities as CSV")
    source_args(sp, 2000)
    sp.set_defaults(rho=0.5)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_polarize)

    for name, helptext in (("encode", "measure one signal: z = H_A x"),
                           ("decode", "reconstruct one signal from z")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--profile", required=True)
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--rate", type=float)
        g.add_argument("--m", type=int, help="number of measurements")
        sp.add_argument("--in", dest="input", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--format", choices=("text", "f64le"), default="text")
        if name == "decode":
            sp.add_argument("--decoder", choices=DECODERS, default="sc")
            sp.add_argument("--seed", type=int, default=0)
        sp.set_defaults(func=cmd_encode if name == "encode" else cmd_decode)

    sp = sub.add_parser("diag", help="numeric diagnostics")
    dsub = sp.add_subparsers(dest="diag", required=True, parser_class=_Parser)
    dp = dsub.add_parser("chain-rule", help="mixed-entropy chain-rule residuals on fixed sources")
    dp.add_argument("--out")
    dp.set_defaults(func=cmd_diag)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except MissingProfileError as exc:
        print(f"error: missing-profile: {exc}", file=sys.stderr)
        return 1
    except ProfileFormatError as exc:
        print(f"error: profile-format: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, IndexError) as exc:
        kind = "io" if isinstance(exc, OSError) else "invalid-input"
        msg = str(exc).replace("\n", " ")
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
