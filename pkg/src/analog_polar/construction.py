"""Choosing the reserved set from per-index MAP error probabilities.

``estimate_error_profile`` runs genie-aided SC passes (conditioning on the
true prefix) and counts, per index, how often MAP estimation of y_k fails.
``rid_tree`` gives the exact information dimension of every conditional,
which lower-bounds the error probability and breaks ties.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .codec import genie_pass
from .hadamard import fwht
from .mixdist import DEFAULT_POLICY, PrunePolicy, SourceModel, rid, sample
from .rng import RNG_NAME, stream

PROFILE_VERSION = 1


class ProfileFormatError(ValueError):
    """Malformed or unsupported profile file."""


def rid_tree(d0: float, n: int) -> np.ndarray:
    """RID of every <Y_k | Y^{k-1}>, k = 1..2**n.

    Bit b of k-1 (most significant first) selects 2d - d^2 (b = 0) or d^2 (b = 1).
    """
    if not 0.0 <= d0 <= 1.0:
        raise ValueError("d0 must lie in [0, 1]")
    d = np.array([float(d0)])
    for _ in range(n):
        d = np.stack((2.0 * d - d * d, d * d), axis=1).reshape(-1)
    return d


def estimate_error_profile(source: SourceModel, n: int, trials: int,
                           policy: PrunePolicy = DEFAULT_POLICY, seed: int = 0,
                           eps_match_rel: float = 1e-6, progress=None) -> np.ndarray:
    """Monte-Carlo estimate of Q_n(k) = P(MAP estimate of Y_k | Y^{k-1} is wrong).

    Trial t draws its signal from ``stream(seed, "construct", t)``, so results
    do not depend on trial order.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    N = 1 << n
    counts = np.zeros(N, dtype=np.int64)
    for t in range(trials):
        x = sample(source.distribution, stream(seed, "construct", t), N)
        errors, _ = genie_pass(fwht(x), source.distribution, policy, eps_match_rel)
        counts += errors
        if progress is not None:
            progress(t + 1, trials)
    return counts / trials


def select_reserved(q_hat, d_theory, M: int) -> np.ndarray:
    """1-based indices of the M largest q_hat (ties: larger d_theory, then smaller index)."""
    q_hat = np.asarray(q_hat, dtype=float)
    d_theory = np.asarray(d_theory, dtype=float)
    N = q_hat.size
    if not 0 <= M <= N:
        raise ValueError(f"M={M} outside [0, {N}]")
    idx = np.arange(1, N + 1)
    order = np.lexsort((idx, -d_theory, -q_hat))
    return np.sort(idx[order[:M]])


def measurements_for_rate(R: float, N: int) -> int:
    """M = ceil(R N), guarding against round-off in R N."""
    if not 0.0 <= R <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    return min(N, int(math.ceil(R * N - 1e-9)))


@dataclass
class ConstructionProfile:
    n: int
    source: SourceModel
    q_hat: np.ndarray
    d_theory: np.ndarray
    trials: int
    seed: int
    policy: PrunePolicy = DEFAULT_POLICY
    stderr: np.ndarray = field(default=None)

    def __post_init__(self):
        self.q_hat = np.asarray(self.q_hat, dtype=float)
        self.d_theory = np.asarray(self.d_theory, dtype=float)
        if self.stderr is None:
            self.stderr = np.sqrt(self.q_hat * (1.0 - self.q_hat) / self.trials)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if self.q_hat.size != 1 << self.n or self.d_theory.size != 1 << self.n:
            raise ValueError("profile vectors must have length 2**n")

    @property
    def N(self) -> int:
        return 1 << self.n

    def reserved(self, M: int) -> np.ndarray:
        return select_reserved(self.q_hat, self.d_theory, M)

    def reserved_for_rate(self, R: float) -> np.ndarray:
        return self.reserved(measurements_for_rate(R, self.N))

    def to_dict(self) -> dict:
        return {
            "version": PROFILE_VERSION,
            "n": self.n,
            "source": self.source.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "rng": RNG_NAME,
            "policy": {"eps_atom": self.policy.eps_atom, "eps_w": self.policy.eps_w,
                       "k_max": self.policy.k_max, "g_max": self.policy.g_max},
            "q_hat": self.q_hat.tolist(),
            "d_theory": self.d_theory.tolist(),
            "stderr": self.stderr.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, ConstructionProfile):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def build_profile(source: SourceModel, n: int, trials: int = 1000, seed: int = 0,
                  policy: PrunePolicy = DEFAULT_POLICY, progress=None) -> ConstructionProfile:
    q_hat = estimate_error_profile(source, n, trials, policy, seed, progress=progress)
    return ConstructionProfile(n, source, q_hat, rid_tree(rid(source.distribution), n),
                               trials, seed, policy)


def save_profile(profile: ConstructionProfile, path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=1) + "\n")


def load_profile(path) -> ConstructionProfile:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ProfileFormatError(f"{path}: expected a JSON object")
    version = obj.get("version")
    if version != PROFILE_VERSION:
        raise ProfileFormatError(f"{path}: unsupported profile version {version!r}")
    try:
        pol = obj.get("policy")
        policy = PrunePolicy(**pol) if pol else DEFAULT_POLICY
        return ConstructionProfile(
            n=int(obj["n"]),
            source=SourceModel.from_dict(obj["source"]),
            q_hat=np.array(obj["q_hat"], dtype=float),
            d_theory=np.array(obj["d_theory"], dtype=float),
            trials=int(obj["trials"]),
            seed=int(obj["seed"]),
            policy=policy,
            stderr=np.array(obj["stderr"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileFormatError(f"{path}: {exc}") from exc
