"""Experiment runner: rate sweeps, polarization reports and entropy diagnostics.

Signals for trial t come from ``stream(seed, "signal", t)``, so every decoder
and every rate sees the same source realizations.  All CSV output is a
deterministic function of the configuration and seed unless wall-clock
timing is explicitly requested.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .baselines import AdmmConfig, AmpConfig, amp_decode, bp_decode
from .codec import FAILED_AT, FALLBACK_USED, encode, ls_fallback, sc_decode
from .construction import (ConstructionProfile, measurements_for_rate, rid_tree,
                           estimate_error_profile)
from .mixdist import (DEFAULT_POLICY, MixedDistribution, PrunePolicy, QuadratureError,
                      QuadratureSpec, SourceModel, mixed_entropy, rid,
                      sample)
from .polarops import continuous_conditional, f_combine, g_condition
from .rng import RNG_NAME, stream

DECODERS = ("sc", "amp", "bp", "ls")
BASELINE_ROWS = ("random", "profile", "rid")
SWEEP_HEADER = ["decoder", "R", "M", "trials", "bler", "nmse", "runtime_ms",
                "failed_at", "fallback", "not_converged", "diverged", "seed", "rng", "source"]
POLAR_HEADER = ["k", "q_hat", "stderr", "d_theory", "seed", "rng"]


def default_rates() -> tuple:
    return tuple(round(0.20 + 0.02 * i, 2) for i in range(21))


class MissingProfileError(FileNotFoundError):
    """Raised when a sweep needs a construction profile that does not exist."""


@dataclass
class ExperimentConfig:
    """Inputs of a BLER/NMSE sweep.

    ``baseline_rows`` picks the rows the AMP and BP baselines measure with:
    a fresh random subset per trial (``random``), the SC reserved set
    (``profile``), or the rows of largest analytic RID (``rid``).
    """

    n: int = 9
    rho: float = 0.2
    sigma2: float = 1.0
    rates: Sequence[float] = field(default_factory=default_rates)
    trials: int = 500
    seed: int = 0
    decoders: Sequence[str] = ("sc",)
    policy: PrunePolicy = DEFAULT_POLICY
    eta: float = 1e-2
    profile_path: Optional[str] = None
    out_path: Optional[str] = None
    baseline_rows: str = "random"
    timing: bool = False
    amp: AmpConfig = AmpConfig()
    admm: AdmmConfig = AdmmConfig()

    def __post_init__(self):
        self.rates = tuple(float(r) for r in self.rates)
        self.decoders = tuple(self.decoders)
        if not self.rates or any(not 0.0 < r <= 1.0 for r in self.rates):
            raise ValueError("rates must lie in (0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        bad = set(self.decoders) - set(DECODERS)
        if bad or not self.decoders:
            raise ValueError(f"unknown decoders {sorted(bad)}; choose from {DECODERS}")
        if self.baseline_rows not in BASELINE_ROWS:
            raise ValueError(f"baseline_rows must be one of {BASELINE_ROWS}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def N(self) -> int:
        return 1 << self.n

    def source(self) -> SourceModel:
        return SourceModel.bernoulli_gaussian(self.rho, self.sigma2)


@dataclass
class MetricRow:
    decoder: str
    R: float
    M: int
    trials: int
    bler: float
    nmse: float
    runtime_ms: Optional[float] = None
    failures: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.bler <= 1.0:
            raise ValueError("bler must lie in [0, 1]")
        if not self.nmse >= 0.0:
            raise ValueError("nmse must be non-negative")

    @property
    def bler_stderr(self) -> float:
        return math.sqrt(self.bler * (1.0 - self.bler) / self.trials)


def block_energy(source: SourceModel | MixedDistribution, N: int) -> float:
    """E||X||^2 for N i.i.d. draws, from the source moments."""
    d = source.distribution if isinstance(source, SourceModel) else source
    return N * d.second_moment()


def bler(x_hat, x, eta: float = 1e-2, energy: Optional[float] = None) -> int:
    """1 if ||x_hat - x||^2 > eta * energy, else 0.

    ``energy`` is the expected block energy; when omitted ``||x||^2`` is used.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    if x_hat.shape != x.shape:
        raise ValueError("x_hat and x must have equal lengths")
    if energy is None:
        energy = float(x @ x)
    err = float(np.sum((x_hat - x) ** 2))
    return int(not err <= eta * energy)


def nmse_estimate(pairs, energy: float) -> float:
    """Mean of ||x_hat - x||^2 over the pairs, divided by the expected block energy."""
    errs = []
    for x_hat, x in pairs:
        x_hat = np.asarray(x_hat, dtype=float)
        x = np.asarray(x, dtype=float)
        if x_hat.shape != x.shape:
            raise ValueError("x_hat and x must have equal lengths")
        errs.append(float(np.sum((x_hat - x) ** 2)))
    if not errs:
        raise ValueError("need at least one pair")
    if not energy > 0:
        raise ValueError("energy must be positive")
    return float(np.mean(errs) / energy)


def _baseline_rows(cfg: ExperimentConfig, profile: ConstructionProfile, M: int, t: int):
    if cfg.baseline_rows == "profile":
        return profile.reserved(M)
    if cfg.baseline_rows == "rid":
        return np.sort(np.argsort(-profile.d_theory, kind="stable")[:M] + 1)
    rng = stream(cfg.seed, f"rows/{M}", t)
    return np.sort(rng.choice(cfg.N, size=M, replace=False) + 1)


def _decode_one(decoder: str, x, cfg: ExperimentConfig, profile: ConstructionProfile,
                source: SourceModel, M: int, t: int):
    """Returns (x_hat, failure cause or None)."""
    N = cfg.N
    if decoder in ("sc", "ls"):
        A = profile.reserved(M)
        z = encode(x, A)
        if decoder == "ls":
            return ls_fallback(z, A, N), None
        res = sc_decode(z, A, source, N, cfg.policy)
        if res.status == FAILED_AT:
            return res.x_hat, "failed_at"
        if res.status == FALLBACK_USED:
            return res.x_hat, "fallback"
        return res.x_hat, None
    A = _baseline_rows(cfg, profile, M, t)
    z = encode(x, A)
    if decoder == "amp":
        res = amp_decode(z, A, source, N, cfg.amp, stream(cfg.seed, f"amp/{M}", t))
    else:
        res = bp_decode(z, A, N, cfg.admm)
    if res.status == "diverged":
        return ls_fallback(z, A, N), "diverged"
    return res.x_hat, (None if res.ok else "not_converged")


def load_or_fail(path) -> ConstructionProfile:
    from .construction import load_profile

    if path is None or not Path(path).exists():
        raise MissingProfileError(
            f"construction profile {path!r} not found; run `analog-polar construct` first")
    return load_profile(path)


def run_sweep(cfg: ExperimentConfig, profile: Optional[ConstructionProfile] = None,
              progress=None) -> list[MetricRow]:
    """BLER and NMSE for every (rate, decoder) pair; writes CSV if cfg.out_path is set."""
    if profile is None:
        profile = load_or_fail(cfg.profile_path)
    if profile.N != cfg.N:
        raise ValueError(f"profile has N={profile.N}, config has N={cfg.N}")
    source = profile.source
    energy = block_energy(source, cfg.N)
    signals = [sample(source.distribution, stream(cfg.seed, "signal", t), cfg.N)
               for t in range(cfg.trials)]
    rows = []
    for R in cfg.rates:
        M = measurements_for_rate(R, cfg.N)
        for decoder in cfg.decoders:
            errors = 0
            sq = []
            failures = {"failed_at": 0, "fallback": 0, "not_converged": 0, "diverged": 0}
            elapsed = 0.0
            for t, x in enumerate(signals):
                t0 = time.perf_counter()
                x_hat, cause = _decode_one(decoder, x, cfg, profile, source, M, t)
                elapsed += time.perf_counter() - t0
                if cause is not None:
                    failures[cause] += 1
                errors += bler(x_hat, x, cfg.eta, energy)
                sq.append((x_hat, x))
            row = MetricRow(decoder, R, M, cfg.trials, errors / cfg.trials,
                            nmse_estimate(sq, energy),
                            1e3 * elapsed / cfg.trials if cfg.timing else None, failures)
            rows.append(row)
            if progress is not None:
                progress(row)
    if cfg.out_path is not None:
        write_sweep_csv(rows, cfg.out_path, cfg.seed, source)
    return rows


def sweep_csv(rows: Sequence[MetricRow], seed: int, source: SourceModel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        f = r.failures
        w.writerow([r.decoder, f"{r.R:.4f}", r.M, r.trials, repr(r.bler), repr(r.nmse),
                    "NA" if r.runtime_ms is None else f"{r.runtime_ms:.3f}",
                    f.get("failed_at", 0), f.get("fallback", 0), f.get("not_converged", 0),
                    f.get("diverged", 0), seed, RNG_NAME, source.descriptor])
    return buf.getvalue()


def write_sweep_csv(rows, path, seed: int, source: SourceModel) -> None:
    Path(path).write_text(sweep_csv(rows, seed, source))


def polarization_report(source: SourceModel, n: int, trials: int, seed: int = 0,
                        policy: PrunePolicy = DEFAULT_POLICY, out_path=None,
                        progress=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Estimate q_hat for every index and write ``k,q_hat,stderr,d_theory`` rows.

    Returns (q_hat, stderr, d_theory).
    """
    q_hat = estimate_error_profile(source, n, trials, policy, seed, progress=progress)
    stderr = np.sqrt(q_hat * (1.0 - q_hat) / trials)
    d_theory = rid_tree(rid(source.distribution), n)
    if out_path is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(POLAR_HEADER)
        for k in range(q_hat.size):
            w.writerow([k + 1, repr(float(q_hat[k])), repr(float(stderr[k])),
                        repr(float(d_theory[k])), seed, RNG_NAME])
        Path(out_path).write_text(buf.getvalue())
    return q_hat, stderr, d_theory


def _merged_intervals(mean, var, n_sigma):
    sd = np.sqrt(var)
    spans = sorted(zip(mean - n_sigma * sd, mean + n_sigma * sd))
    out = []
    for a, b in spans:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def chain_rule_check(P1: MixedDistribution, P2: MixedDistribution,
                     quadrature: QuadratureSpec = QuadratureSpec()) -> float:
    """H(Y1) + E_y H(Y2 | Y1 = y) - H(X1) - H(X2) + [rho1(1-rho2) + rho2(1-rho1)]/2, in bits.

    H is the mixed entropy.  The expectation over y splits into the atoms of
    Y1 (exact sum) and its continuous part (adaptive quadrature of
    F(y) H(Y2 | Y1 = y)).  The result should be zero.
    """
    r1, r2 = rid(P1), rid(P2)
    Y1 = f_combine(P1, P2, None)
    expected = 0.0
    for loc, w in Y1.atoms:
        expected += w * mixed_entropy(g_condition(P1, P2, loc, None), quadrature)

    def integrand(y):
        law, logf = continuous_conditional(P1, P2, y)
        return math.exp(logf) * mixed_entropy(law, quadrature)

    if Y1.n_gaussians:
        for a, b in _merged_intervals(Y1.mean, Y1.var, quadrature.n_sigma):
            pts = sorted({float(m) for m in Y1.mean if a < m < b} | {float(l) for l in Y1.loc if a < l < b})
            val, err = integrate.quad(integrand, a, b, points=pts[:50] or None,
                                      epsabs=quadrature.abs_tol, epsrel=quadrature.rel_tol,
                                      limit=quadrature.limit)
            if not np.isfinite(val) or err > 1e3 * max(quadrature.abs_tol, quadrature.rel_tol * abs(val)):
                raise QuadratureError(f"conditional entropy quadrature on [{a:g}, {b:g}] reached error {err:g}")
            expected += val
    correction = 0.5 * (r1 * (1.0 - r2) + r2 * (1.0 - r1))
    return (mixed_entropy(Y1, quadrature) + expected - mixed_entropy(P1, quadrature)
            - mixed_entropy(P2, quadrature) + correction)


def chain_rule_cases() -> dict:
    """Five fixed source pairs for the chain-rule diagnostic."""
    M = MixedDistribution.from_components
    from .mixdist import bernoulli_gaussian

    return {
        "bg-0.5": (bernoulli_gaussian(0.5), bernoulli_gaussian(0.5)),
        "bg-0.2/bg-0.7": (bernoulli_gaussian(0.2), bernoulli_gaussian(0.7, 2.0)),
        "lattice": (M([(0, 0.3), (1, 0.4)], [(0, 1, 0.3)]), M([(0, 0.5), (1, 0.2)], [(0.5, 1.5, 0.3)])),
        "two-gauss": (M([(-1, 0.2), (1, 0.3)], [(0, 1, 0.3), (2, 0.5, 0.2)]), M([(0, 0.4)], [(1, 2, 0.6)])),
        "ternary": (M([(-1, 0.25), (0, 0.25), (1, 0.25)], [(0, 3, 0.25)]),
                    M([(-1, 0.1), (0, 0.4), (1, 0.1)], [(0, 0.5, 0.2), (-1, 1, 0.2)])),
    }
