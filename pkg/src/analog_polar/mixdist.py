"""Nonsingular distributions: finitely many atoms plus a finite Gaussian mixture.

Every distribution is stored through its mixed representation: the atoms carry
the discrete part with absolute masses ``(1 - rho) * P(D = x)`` and the
Gaussians carry the continuous part with absolute masses summing to ``rho``,
the Renyi information dimension.  All entropies are in bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from . import _kernels


class DegenerateDistributionError(ValueError):
    """Raised when a distribution has no probability mass to normalize."""


class QuadratureError(ArithmeticError):
    """Raised when numerical integration does not reach its tolerance."""


@dataclass(frozen=True)
class PrunePolicy:
    """Limits applied after each f/g operation to keep supports bounded.

    The caps are small on purpose: at blocklength 512 the per-index error
    profile and the decoder's BLER barely move between (16, 4) and (64, 16),
    while runtime grows roughly linearly in the caps.
    """

    eps_atom: float = 1e-9
    eps_w: float = 1e-12
    k_max: int = 16
    g_max: int = 4

    def __post_init__(self):
        if not (self.eps_atom > 0 and self.eps_w > 0):
            raise ValueError("eps_atom and eps_w must be positive")
        if self.k_max < 1 or self.g_max < 1:
            raise ValueError("k_max and g_max must be at least 1")


DEFAULT_POLICY = PrunePolicy()
# keeps every component; only coincident atoms/Gaussians are merged
LOSSLESS_POLICY = PrunePolicy(eps_atom=1e-12, eps_w=1e-300, k_max=10**9, g_max=10**9)


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive quadrature settings for differential entropies."""

    n_sigma: float = 8.0
    abs_tol: float = 1e-8
    rel_tol: float = 1e-10
    limit: int = 500


def _as_float_array(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64).reshape(-1)


@dataclass(frozen=True, eq=False)
class MixedDistribution:
    """Atoms plus Gaussian mixture, with absolute component masses.

    Construct with :meth:`from_components` (lists of tuples) or directly from
    the five flat arrays.  Instances are treated as immutable.
    """

    loc: np.ndarray
    atom_w: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    gauss_w: np.ndarray

    def __post_init__(self):
        for name in ("loc", "atom_w", "mean", "var", "gauss_w"):
            object.__setattr__(self, name, _as_float_array(getattr(self, name)))
        if self.loc.shape != self.atom_w.shape:
            raise ValueError("atom locations and weights differ in length")
        if not (self.mean.shape == self.var.shape == self.gauss_w.shape):
            raise ValueError("gaussian parameter arrays differ in length")
        if np.any(self.atom_w < 0) or np.any(self.gauss_w < 0):
            raise ValueError("weights must be non-negative")
        if np.any(~(self.var > 0)):
            raise ValueError("variances must be strictly positive")
        if not (np.all(np.isfinite(self.loc)) and np.all(np.isfinite(self.mean))):
            raise ValueError("locations and means must be finite")
        if self.loc.size > 1 and np.any(np.diff(self.loc) < 0):
            order = np.argsort(self.loc, kind="mergesort")
            object.__setattr__(self, "loc", self.loc[order])
            object.__setattr__(self, "atom_w", self.atom_w[order])

    @classmethod
    def _raw(cls, loc, atom_w, mean, var, gauss_w) -> "MixedDistribution":
        # trusted constructor for kernel output (already validated and sorted)
        obj = object.__new__(cls)
        object.__setattr__(obj, "loc", loc)
        object.__setattr__(obj, "atom_w", atom_w)
        object.__setattr__(obj, "mean", mean)
        object.__setattr__(obj, "var", var)
        object.__setattr__(obj, "gauss_w", gauss_w)
        return obj

    @classmethod
    def from_components(
        cls,
        atoms: Iterable[Sequence[float]] = (),
        gaussians: Iterable[Sequence[float]] = (),
    ) -> "MixedDistribution":
        atoms = np.asarray(list(atoms), dtype=np.float64).reshape(-1, 2)
        gaussians = np.asarray(list(gaussians), dtype=np.float64).reshape(-1, 3)
        return cls(atoms[:, 0], atoms[:, 1], gaussians[:, 0], gaussians[:, 1], gaussians[:, 2])

    @property
    def atoms(self) -> np.ndarray:
        """(K, 2) array of (location, mass)."""
        return np.column_stack((self.loc, self.atom_w))

    @property
    def gaussians(self) -> np.ndarray:
        """(G, 3) array of (mean, variance, mass)."""
        return np.column_stack((self.mean, self.var, self.gauss_w))

    @property
    def n_atoms(self) -> int:
        return self.loc.size

    @property
    def n_gaussians(self) -> int:
        return self.mean.size

    @property
    def total_weight(self) -> float:
        return float(self.atom_w.sum() + self.gauss_w.sum())

    def moments(self) -> tuple[float, float]:
        """Mean and variance of the (normalized) distribution."""
        tot = self.total_weight
        m = (self.atom_w @ self.loc + self.gauss_w @ self.mean) / tot
        second = (self.atom_w @ self.loc**2 + self.gauss_w @ (self.var + self.mean**2)) / tot
        return float(m), float(second - m * m)

    def second_moment(self) -> float:
        tot = self.total_weight
        return float((self.atom_w @ self.loc**2 + self.gauss_w @ (self.var + self.mean**2)) / tot)

    def mirror(self) -> "MixedDistribution":
        """Distribution of -X."""
        return MixedDistribution(-self.loc[::-1], self.atom_w[::-1], -self.mean, self.var, self.gauss_w)

    def isclose(self, other: "MixedDistribution", rtol: float = 1e-12, atol: float = 1e-15) -> bool:
        if self.n_atoms != other.n_atoms or self.n_gaussians != other.n_gaussians:
            return False
        return all(
            np.allclose(getattr(self, k), getattr(other, k), rtol=rtol, atol=atol)
            for k in ("loc", "atom_w", "mean", "var", "gauss_w")
        )

    def __eq__(self, other):
        if not isinstance(other, MixedDistribution):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("loc", "atom_w", "mean", "var", "gauss_w")
        )

    __hash__ = None

    def __repr__(self):
        atoms = ", ".join(f"{x:.6g}: {w:.6g}" for x, w in zip(self.loc, self.atom_w))
        gs = ", ".join(f"N({m:.6g}, {v:.6g}): {w:.6g}" for m, v, w in zip(self.mean, self.var, self.gauss_w))
        return f"MixedDistribution(atoms={{{atoms}}}, gaussians={{{gs}}})"

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        def num(v):
            return format(float(v), ".17g")

        atoms = ",".join(f"[{num(x)},{num(w)}]" for x, w in zip(self.loc, self.atom_w))
        gs = ",".join(
            f"[{num(m)},{num(v)},{num(w)}]" for m, v, w in zip(self.mean, self.var, self.gauss_w)
        )
        return f'{{"atoms":[{atoms}],"gaussians":[{gs}]}}'

    @classmethod
    def from_json(cls, text) -> "MixedDistribution":
        obj = json.loads(text) if isinstance(text, str) else text
        return cls.from_components(obj.get("atoms", []), obj.get("gaussians", []))


def atom(x: float) -> MixedDistribution:
    return MixedDistribution.from_components([(x, 1.0)])


def gaussian(mean: float = 0.0, var: float = 1.0) -> MixedDistribution:
    return MixedDistribution.from_components((), [(mean, var, 1.0)])


def bernoulli_gaussian(rho: float, sigma2: float = 1.0) -> MixedDistribution:
    """(1 - rho) delta_0 + rho N(0, sigma2)."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    atoms = [(0.0, 1.0 - rho)] if rho < 1 else []
    gs = [(0.0, sigma2, rho)] if rho > 0 else []
    return MixedDistribution.from_components(atoms, gs)


@dataclass(frozen=True)
class SourceModel:
    """An i.i.d. source: a distribution together with a readable descriptor."""

    distribution: MixedDistribution
    descriptor: str
    params: dict = field(default_factory=dict)

    @classmethod
    def bernoulli_gaussian(cls, rho: float, sigma2: float = 1.0) -> "SourceModel":
        return cls(
            bernoulli_gaussian(rho, sigma2),
            f"BG(rho={rho:g}, sigma2={sigma2:g})",
            {"kind": "bernoulli_gaussian", "rho": rho, "sigma2": sigma2},
        )

    def energy_per_sample(self) -> float:
        """E[X^2]."""
        return self.distribution.second_moment()

    def to_dict(self) -> dict:
        return {
            "descriptor": self.descriptor,
            "params": dict(self.params),
            "distribution": json.loads(self.distribution.to_json()),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SourceModel":
        return cls(MixedDistribution.from_json(obj["distribution"]), obj["descriptor"], dict(obj.get("params", {})))


# -- basic functionals ---------------------------------------------------


def normalize(d: MixedDistribution) -> MixedDistribution:
    tot = d.total_weight
    if not tot > 0:
        raise DegenerateDistributionError("distribution has zero total weight")
    return MixedDistribution(d.loc, d.atom_w / tot, d.mean, d.var, d.gauss_w / tot)


def rid(d: MixedDistribution) -> float:
    """Renyi information dimension: the continuous mass."""
    return float(d.gauss_w.sum())


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    p = p / p.sum()
    return float(-(p * np.log2(p)).sum())


def discrete_entropy(d: MixedDistribution) -> float:
    """Entropy of the atoms renormalized to a probability vector (0 if none)."""
    return _entropy_bits(d.atom_w)


def weighted_discrete_entropy(d: MixedDistribution) -> float:
    return (1.0 - rid(d)) * discrete_entropy(d)


def h2(p: float) -> float:
    """Binary entropy in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def h2_inverse(h: float) -> float:
    """Inverse of the binary entropy restricted to [0, 1/2]."""
    if h <= 0.0:
        return 0.0
    if h >= 1.0:
        return 0.5
    return optimize.brentq(lambda p: h2(p) - h, 0.0, 0.5, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def gaussian_mixture_entropy(mean, var, w, quadrature: QuadratureSpec = QuadratureSpec()) -> float:
    """Differential entropy (bits) of the normalized Gaussian mixture."""
    mean = _as_float_array(mean)
    var = _as_float_array(var)
    w = _as_float_array(w)
    keep = w > 0
    mean, var, w = mean[keep], var[keep], w[keep]
    if w.size == 0:
        raise DegenerateDistributionError("no continuous component")
    w = w / w.sum()
    if w.size == 1:
        return 0.5 * math.log2(2 * math.pi * math.e * var[0])
    sd = np.sqrt(var)
    logw = np.log(w)
    c = -0.5 * np.log(2 * np.pi * var)

    def integrand(t):
        lp = logsumexp(logw + c - 0.5 * (t - mean) ** 2 / var)
        return -math.exp(lp) * lp

    lo = mean - quadrature.n_sigma * sd
    hi = mean + quadrature.n_sigma * sd
    order = np.argsort(lo)
    intervals = []
    for a, b in zip(lo[order], hi[order]):
        if intervals and a <= intervals[-1][1]:
            intervals[-1][1] = max(intervals[-1][1], b)
        else:
            intervals.append([a, b])
    total = 0.0
    for a, b in intervals:
        pts = [m for m in mean if a < m < b]
        val, err = integrate.quad(
            integrand, a, b, points=pts[:50] or None, epsabs=quadrature.abs_tol,
            epsrel=quadrature.rel_tol, limit=quadrature.limit,
        )
        if not np.isfinite(val) or err > max(quadrature.abs_tol, quadrature.rel_tol * abs(val)) * 10:
            raise QuadratureError(f"entropy quadrature on [{a:g}, {b:g}] reached error {err:g}")
        total += val
    return total / math.log(2)


def mixed_entropy(d: MixedDistribution, quadrature: QuadratureSpec = QuadratureSpec()) -> float:
    """rho h(C) + (1 - rho) H(D) + h2(rho), in bits."""
    rho = rid(d)
    hc = gaussian_mixture_entropy(d.mean, d.var, d.gauss_w, quadrature) if rho > 0 else 0.0
    hd = discrete_entropy(d) if rho < 1 else 0.0
    return rho * hc + (1.0 - rho) * hd + h2(rho)


def map_estimate(d: MixedDistribution) -> Optional[tuple[float, float]]:
    """Heaviest atom (smallest location on ties), or None when there are no atoms."""
    if d.n_atoms == 0:
        return None
    # argmax returns the first maximum and atoms are sorted by location
    i = int(np.argmax(d.atom_w))
    return float(d.loc[i]), float(d.atom_w[i])


def error_probability(d: MixedDistribution) -> float:
    """MAP error probability 1 - max atom mass."""
    if d.n_atoms == 0:
        return float(d.gauss_w.sum() + d.atom_w.sum())
    return float(d.total_weight - d.atom_w.max())


def sample(d: MixedDistribution, rng: np.random.Generator, size=None):
    """Draw from d; returns a float when size is None."""
    n = 1 if size is None else int(np.prod(size))
    w = np.concatenate((d.atom_w, d.gauss_w))
    comp = rng.choice(w.size, size=n, p=w / w.sum())
    out = np.empty(n)
    is_atom = comp < d.n_atoms
    out[is_atom] = d.loc[comp[is_atom]]
    g = comp[~is_atom] - d.n_atoms
    out[~is_atom] = d.mean[g] + np.sqrt(d.var[g]) * rng.standard_normal(g.size)
    if size is None:
        return float(out[0])
    return out.reshape(size)


def prune(d: MixedDistribution, policy: PrunePolicy = DEFAULT_POLICY) -> MixedDistribution:
    """Merge near atoms, drop light components, enforce count caps, renormalize."""
    loc, aw, m, v, gw, _ = _kernels.prune(
        d.loc, d.atom_w, d.mean, d.var, d.gauss_w,
        policy.eps_atom, policy.eps_w, policy.k_max, policy.g_max,
    )
    return MixedDistribution._raw(loc, aw, m, v, gw)
