"""Partial Hadamard encoder and analog successive-cancellation decoder.

The decoder walks the usual depth-n SC tree.  A node covering a block of
2**l outputs receives the laws of its 2**l independent inputs; the first
half of its outputs is the transform of the pairwise sums (law ``f``), the
second half the transform of the pairwise differences, whose laws given the
already decoded sums are ``g``.  Leaves are visited in order k = 1..N, so each
leaf sees exactly the conditional law of Y_k given the decoded prefix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hadamard import as_index_set, embed_rows_transpose, fwht, log2_size, project_rows
from .mixdist import DEFAULT_POLICY, MixedDistribution, PrunePolicy, SourceModel
from .polarops import ConditioningError, f_combine, g_condition

INV_SQRT2 = 1.0 / math.sqrt(2.0)

SUCCESS = "success"
FAILED_AT = "failed_at"
FALLBACK_USED = "fallback_used"


@dataclass
class DecodeResult:
    """Outcome of one SC decode.

    ``status`` is ``success``, ``failed_at`` (an index outside A had an
    atom-free conditional; ``failed_index`` is 1-based) or ``fallback_used``
    (a conditioning value fell outside the support).  On any failure the
    least-squares estimate is returned.
    """

    x_hat: np.ndarray
    y_hat: np.ndarray
    status: str = SUCCESS
    failed_index: Optional[int] = None
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


class _DecodeFailure(Exception):
    def __init__(self, status, index):
        super().__init__(status, index)
        self.status = status
        self.index = index


def encode(x, A) -> np.ndarray:
    """z = H_A x."""
    x = np.asarray(x, dtype=np.float64)
    log2_size(x.size)
    return project_rows(fwht(x), A, x.size)


def ls_fallback(z, A, N: int) -> np.ndarray:
    """Least-squares estimate H_A^T z (rows of H_A are orthonormal)."""
    return embed_rows_transpose(z, A, N)


class _SCTree:
    """One pass over the SC tree.

    ``known`` marks leaves whose value is supplied (measured, or every leaf in
    genie mode); ``estimate`` marks leaves whose conditional must be computed.
    """

    def __init__(self, source: MixedDistribution, N: int, policy: PrunePolicy,
                 known_values: np.ndarray, known: np.ndarray, estimate: np.ndarray,
                 genie: bool = False, eps_match_rel: float = 1e-6):
        self.source = source
        self.N = N
        self.policy = policy
        self.values = known_values
        self.known = known
        self.estimate = estimate
        self.genie = genie
        self.eps_match_rel = eps_match_rel
        self.y_hat = np.zeros(N)
        self.errors = np.zeros(N, dtype=bool)
        self.leaf_laws: dict[int, MixedDistribution] = {}
        self.keep_laws = False
        # prefix count of leaves needing estimation, for skipping fully known blocks
        self._est_prefix = np.concatenate(([0], np.cumsum(estimate)))
        self.n_f = 0
        self.n_g = 0
        self.max_atoms = 0
        self.max_gaussians = 0

    def _needs(self, lo, size):
        return self._est_prefix[lo + size] > self._est_prefix[lo]

    def _first_needed(self, lo):
        return int(np.searchsorted(self._est_prefix, self._est_prefix[lo] + 1)) - 1

    def _track(self, d):
        if d.n_atoms > self.max_atoms:
            self.max_atoms = d.n_atoms
        if d.n_gaussians > self.max_gaussians:
            self.max_gaussians = d.n_gaussians

    def run(self):
        self._node([self.source] * self.N, 0, self.N)
        return self.y_hat

    def _leaf(self, law, k):
        if self.keep_laws:
            self.leaf_laws[k] = law
        if not self.estimate[k]:
            self.y_hat[k] = self.values[k]
            return self.y_hat[k]
        if law.n_atoms == 0:
            if self.genie:
                self.errors[k] = True
                self.y_hat[k] = self.values[k]
                return self.y_hat[k]
            raise _DecodeFailure(FAILED_AT, k)
        i = int(np.argmax(law.atom_w))
        guess = float(law.loc[i])
        if self.genie:
            truth = self.values[k]
            if abs(guess - truth) > self.eps_match_rel * max(1.0, abs(truth)):
                self.errors[k] = True
            self.y_hat[k] = truth
        else:
            self.y_hat[k] = guess
        return self.y_hat[k]

    def _node(self, laws, lo, size):
        """Decode outputs lo..lo+size-1; returns the node's input-domain values."""
        if size == 1:
            return np.array([self._leaf(laws[0], lo)])
        if not self._needs(lo, size):
            block = self.values[lo:lo + size]
            self.y_hat[lo:lo + size] = block
            return fwht(block)
        half = size // 2
        policy = self.policy
        if self._needs(lo, half):
            memo = {}
            left = []
            for j in range(half):
                a, b = laws[2 * j], laws[2 * j + 1]
                key = (id(a), id(b))
                d = memo.get(key)
                if d is None:
                    d = f_combine(a, b, policy)
                    self.n_f += 1
                    self._track(d)
                    memo[key] = d
                left.append(d)
        else:
            left = [None] * half
        u = self._node(left, lo, half)
        if self._needs(lo + half, half):
            right = []
            for j in range(half):
                try:
                    d = g_condition(laws[2 * j], laws[2 * j + 1], u[j], policy)
                except ConditioningError:
                    raise _DecodeFailure(FALLBACK_USED, self._first_needed(lo + half))
                self.n_g += 1
                self._track(d)
                right.append(d)
        else:
            right = [None] * half
        v = self._node(right, lo + half, half)
        x = np.empty(size)
        x[0::2] = (u + v) * INV_SQRT2
        x[1::2] = (u - v) * INV_SQRT2
        return x


def sc_decode(z, A, source: SourceModel | MixedDistribution, N: int,
              policy: PrunePolicy = DEFAULT_POLICY) -> DecodeResult:
    """Analog SC decoding of z = H_A x for an i.i.d. source.

    Indices in A are copied from z; every other y_k is the MAP atom of its
    conditional law given the decoded prefix.  If some conditional has no
    atoms the least-squares estimate is returned with status ``failed_at``.
    """
    law = source.distribution if isinstance(source, SourceModel) else source
    log2_size(N)
    A = as_index_set(A, N)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != A.size:
        raise ValueError(f"measurement length {z.size} does not match |A| = {A.size}")
    known = np.zeros(N, dtype=bool)
    known[A - 1] = True
    values = np.zeros(N)
    values[A - 1] = z
    tree = _SCTree(law, N, policy, values, known, ~known)
    try:
        y_hat = tree.run()
    except _DecodeFailure as fail:
        stats = {"n_f": tree.n_f, "n_g": tree.n_g,
                 "max_atoms": tree.max_atoms, "max_gaussians": tree.max_gaussians}
        x_hat = ls_fallback(z, A, N)
        return DecodeResult(x_hat, fwht(x_hat), fail.status, fail.index + 1, stats)
    stats = {"n_f": tree.n_f, "n_g": tree.n_g,
             "max_atoms": tree.max_atoms, "max_gaussians": tree.max_gaussians}
    return DecodeResult(fwht(y_hat), y_hat, SUCCESS, None, stats)


def genie_pass(y_true, source: MixedDistribution, policy: PrunePolicy = DEFAULT_POLICY,
               eps_match_rel: float = 1e-6, keep_laws: bool = False):
    """Evaluate every conditional law along the true prefix.

    Returns a boolean array marking indices where MAP estimation fails (no
    atoms, or MAP atom further than eps_match from the true value), and the
    tree (whose ``leaf_laws`` holds the conditionals when ``keep_laws``).
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    N = y_true.size
    log2_size(N)
    tree = _SCTree(source, N, policy, y_true, np.ones(N, dtype=bool), np.ones(N, dtype=bool),
                   genie=True, eps_match_rel=eps_match_rel)
    tree.keep_laws = keep_laws
    tree.run()
    return tree.errors, tree
