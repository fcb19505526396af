"""The f (sum) and g (conditional difference) operations on mixed distributions.

For independent X1 ~ P1, X2 ~ P2 with Y1 = (X1 + X2)/sqrt(2) and
Y2 = (X1 - X2)/sqrt(2):

* ``f_combine(P1, P2)`` is the law of Y1;
* ``g_condition(P1, P2, y)`` is the law of Y2 given Y1 = y.

Both stay inside the atoms + Gaussian-mixture family, so they are computed
in closed form.  Densities are evaluated in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .mixdist import DEFAULT_POLICY, MixedDistribution, PrunePolicy

SQRT2 = math.sqrt(2.0)
_MERGE_ONLY = PrunePolicy(eps_atom=DEFAULT_POLICY.eps_atom, eps_w=1e-300, k_max=2**62, g_max=2**62)


class ConditioningError(ValueError):
    """Raised when conditioning on a value outside the support of the sum."""


@dataclass(frozen=True)
class JointWeights:
    """Density contributions to the continuous part of Y1 at a point.

    F1: atom of P1 plus continuous part of P2; F2: the mirror case; F3: both
    continuous.  ``discrete_mass_at_y`` is the mass of the sum atom at y.
    """

    F1: float
    F2: float
    F3: float
    F: float
    discrete_mass_at_y: float

    @property
    def rho_y(self) -> float:
        """Continuous weight of the conditional, F3/F (0 when F vanishes)."""
        return self.F3 / self.F if self.F > 0 else 0.0


def _args(P: MixedDistribution):
    return P.loc, P.atom_w, P.mean, P.var, P.gauss_w


def _finish(arrays, policy: Optional[PrunePolicy]) -> MixedDistribution:
    loc, aw, m, v, gw = arrays
    if policy is None:
        # exact result: only coincident atoms (and identical Gaussians) are merged
        policy = _MERGE_ONLY
    loc, aw, m, v, gw, _ = _kernels.prune(
        loc, aw, m, v, gw, policy.eps_atom, policy.eps_w, policy.k_max, policy.g_max
    )
    return MixedDistribution._raw(loc, aw, m, v, gw)


def f_combine(
    P1: MixedDistribution, P2: MixedDistribution, policy: Optional[PrunePolicy] = DEFAULT_POLICY
) -> MixedDistribution:
    """Law of (X1 + X2)/sqrt(2).  ``policy=None`` returns the exact, unpruned result."""
    if policy is None:
        return _finish(_kernels.f_combine(*_args(P1), *_args(P2), 0.0), None)
    loc, aw, m, v, gw, _ = _kernels.f_pruned(
        *_args(P1), *_args(P2), policy.eps_atom, policy.eps_w, policy.k_max, policy.g_max
    )
    return MixedDistribution._raw(loc, aw, m, v, gw)


def sum_atom_mass(P1: MixedDistribution, P2: MixedDistribution, y: float, eps_atom: float) -> float:
    ii, jj = _kernels.sum_atom_pairs(P1.loc, P1.atom_w, P2.loc, P2.atom_w, float(y), eps_atom)
    return float(np.sum(P1.atom_w[ii] * P2.atom_w[jj]))


def joint_weights(
    P1: MixedDistribution, P2: MixedDistribution, y: float, eps_atom: float = DEFAULT_POLICY.eps_atom
) -> JointWeights:
    lp, lq, lc, _, _ = _kernels.joint_log_terms(*_args(P1), *_args(P2), float(y))
    F1 = float(np.exp(lp).sum())
    F2 = float(np.exp(lq).sum())
    F3 = float(np.exp(lc).sum())
    return JointWeights(F1, F2, F3, F1 + F2 + F3, sum_atom_mass(P1, P2, y, eps_atom))


def discrete_conditional(
    P1: MixedDistribution, P2: MixedDistribution, y: float, eps_atom: float = DEFAULT_POLICY.eps_atom
) -> MixedDistribution:
    """Law of (D1 - D2)/sqrt(2) given (D1 + D2)/sqrt(2) = y over the atoms of P1 and P2.

    Matching pairs are those whose scaled sum is within eps_atom of y.
    """
    ii, jj = _kernels.sum_atom_pairs(P1.loc, P1.atom_w, P2.loc, P2.atom_w, float(y), eps_atom)
    w = P1.atom_w[ii] * P2.atom_w[jj]
    tot = w.sum()
    if ii.size == 0 or not tot > 0:
        raise ConditioningError(f"no atom pair sums to y={y!r}")
    loc = (P1.loc[ii] - P2.loc[jj]) / SQRT2
    empty = np.empty(0)
    return _finish((loc, w / tot, empty, empty, empty), None)


def g_condition(
    P1: MixedDistribution,
    P2: MixedDistribution,
    y: float,
    policy: Optional[PrunePolicy] = DEFAULT_POLICY,
) -> MixedDistribution:
    """Law of (X1 - X2)/sqrt(2) given (X1 + X2)/sqrt(2) = y.

    When y is an atom of the sum of the discrete parts the result is the
    purely discrete conditional; otherwise the continuous branch applies.
    ``policy=None`` skips pruning (eps_atom of the default policy is still
    used to recognise atoms).
    """
    y = float(y)
    if policy is not None:
        loc, aw, m, v, gw, branch = _kernels.g_pruned(
            *_args(P1), *_args(P2), y, policy.eps_atom, policy.eps_w, policy.k_max, policy.g_max
        )
        if branch < 0:
            raise ConditioningError(f"y={y!r} lies outside the support of the sum")
        return MixedDistribution._raw(loc, aw, m, v, gw)
    eps_atom = DEFAULT_POLICY.eps_atom
    ii, jj = _kernels.sum_atom_pairs(P1.loc, P1.atom_w, P2.loc, P2.atom_w, y, eps_atom)
    if ii.size:
        w = P1.atom_w[ii] * P2.atom_w[jj]
        if w.sum() > 0:
            loc = (P1.loc[ii] - P2.loc[jj]) / SQRT2
            empty = np.empty(0)
            return _finish((loc, w / w.sum(), empty, empty, empty), policy)
    loc, aw, m, v, gw, logf = _kernels.g_continuous(*_args(P1), *_args(P2), y)
    if logf == -np.inf:
        raise ConditioningError(f"y={y!r} lies outside the support of the sum")
    return _finish((loc, aw, m, v, gw), policy)


def continuous_conditional(P1: MixedDistribution, P2: MixedDistribution, y: float):
    """Continuous-branch law of Y2 given Y1 = y and log F(y).

    F is the density of the continuous part of Y1 (it integrates to the RID of
    the sum).  Unlike ``g_condition`` this never switches to the discrete
    branch, which makes it suitable as a quadrature integrand.
    """
    loc, aw, m, v, gw, logf = _kernels.g_continuous(*_args(P1), *_args(P2), float(y))
    if logf == -np.inf:
        raise ConditioningError(f"continuous density of the sum vanishes at y={y!r}")
    return _finish((loc, aw, m, v, gw), None), float(logf)
