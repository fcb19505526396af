"""Reference decoders for partial Hadamard measurements.

* Bayesian AMP with the Bernoulli-Gaussian posterior-mean denoiser;
* Basis Pursuit (min ||x||_1 s.t. H_A x = z) solved by ADMM;
* plain least squares, ``codec.ls_fallback``.

All of them use the fast transform; the rows of ``H_A`` are orthonormal, so
the projection onto ``{x : H_A x = z}`` is ``x + H_A^T (z - H_A x)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .hadamard import as_index_set, fwht, log2_size
from .mixdist import SourceModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmpConfig:
    max_iters: int = 200
    damping: float = 0.0
    restarts: int = 10
    tol: float = 1e-10

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class AdmmConfig:
    penalty: float = 1.0
    max_iters: int = 5000
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8

    def __post_init__(self):
        if not (self.penalty > 0 and self.primal_tol > 0 and self.dual_tol > 0):
            raise ValueError("penalty and tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class BaselineResult:
    """Estimate plus solver status (``converged``, ``max_iters`` or ``diverged``)."""

    x_hat: np.ndarray
    status: str
    residual: float
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status == "converged"


class PartialHadamard:
    """The operator x -> H_A x and its adjoint, A given 1-based."""

    def __init__(self, A, N: int):
        log2_size(N)
        self.N = N
        self.rows = as_index_set(A, N) - 1
        self.M = self.rows.size

    def matvec(self, x):
        return fwht(x)[self.rows]

    def rmatvec(self, z):
        full = np.zeros(self.N)
        full[self.rows] = z
        return fwht(full)


def bg_denoiser(v, tau2: float, rho: float, sigma2: float):
    """Posterior mean of X given X + sqrt(tau2) Z = v and its derivative in v.

    Prior: X ~ (1 - rho) delta_0 + rho N(0, sigma2).
    """
    v = np.asarray(v, dtype=np.float64)
    if not tau2 > 0:
        raise ValueError("tau2 must be positive")
    if rho <= 0.0:
        return np.zeros_like(v), np.zeros_like(v)
    shrink = sigma2 / (sigma2 + tau2)
    if rho >= 1.0:
        return shrink * v, np.full_like(v, shrink)
    # log-odds that v came from the Gaussian component
    logit = (math.log(rho / (1.0 - rho)) - 0.5 * math.log((sigma2 + tau2) / tau2)
             + 0.5 * v * v * (1.0 / tau2 - 1.0 / (sigma2 + tau2)))
    pi = 0.5 * (1.0 + np.tanh(0.5 * logit))
    dlogit = v * sigma2 / (tau2 * (sigma2 + tau2))
    mean = pi * shrink * v
    deriv = shrink * pi + shrink * v * pi * (1.0 - pi) * dlogit
    return mean, deriv


def _bg_params(source: SourceModel):
    d = source.distribution
    params = source.params or {}
    if params.get("kind") == "bernoulli_gaussian":
        return float(params["rho"]), float(params["sigma2"])
    # fall back to reading the distribution: one atom at 0, one centred Gaussian
    ok = (d.n_gaussians <= 1 and d.n_atoms <= 1 and (d.n_atoms == 0 or d.loc[0] == 0.0)
          and (d.n_gaussians == 0 or d.mean[0] == 0.0))
    if not ok:
        raise ValueError("AMP denoiser needs a Bernoulli-Gaussian source")
    rho = float(d.gauss_w.sum())
    return rho, float(d.var[0]) if d.n_gaussians else 1.0


def _amp_run(op: PartialHadamard, z, x0, rho, sigma2, cfg: AmpConfig):
    N, M = op.N, op.M
    scale = math.sqrt(N / M)
    zt = scale * z
    znorm = max(np.linalg.norm(z), 1e-300)
    x = x0.copy()
    r = zt - scale * op.matvec(x)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        tau2 = max(float(r @ r) / M, 1e-30)
        pseudo = x + scale * op.rmatvec(r)
        x_new, deriv = bg_denoiser(pseudo, tau2, rho, sigma2)
        if cfg.damping:
            x_new = cfg.damping * x + (1.0 - cfg.damping) * x_new
        onsager = deriv.sum() / M
        r = zt - scale * op.matvec(x_new) + onsager * r
        x = x_new
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
            return x, "diverged", np.inf, it
        res = np.linalg.norm(op.matvec(x) - z) / znorm
        if res < cfg.tol:
            return x, "converged", res, it
    res = np.linalg.norm(op.matvec(x) - z) / znorm
    return x, "max_iters", res, it


def amp_decode(z, A, source: SourceModel, N: int, cfg: AmpConfig = AmpConfig(),
               rng: np.random.Generator | None = None) -> BaselineResult:
    """Bayesian AMP with restarts; the run with the smallest final residual wins.

    The first run starts at x = 0, the others at draws from the source.
    Residuals are relative, ||H_A x - z|| / ||z||.
    """
    from .mixdist import sample

    rho, sigma2 = _bg_params(source)
    op = PartialHadamard(A, N)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != op.M:
        raise ValueError(f"measurement length {z.size} does not match |A| = {op.M}")
    if op.M == 0:
        return BaselineResult(np.zeros(N), "converged", 0.0, 0)
    if rng is None:
        rng = np.random.default_rng(0)
    best = None
    for restart in range(cfg.restarts):
        x0 = np.zeros(N) if restart == 0 else sample(source.distribution, rng, N)
        x, status, res, it = _amp_run(op, z, x0, rho, sigma2, cfg)
        if status == "diverged":
            continue
        if best is None or res < best.residual:
            best = BaselineResult(x, status, res, it)
        if res < cfg.tol:
            break
    if best is None:
        return BaselineResult(np.full(N, np.nan), "diverged", np.inf, cfg.max_iters)
    return best


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def bp_decode(z, A, N: int, cfg: AdmmConfig = AdmmConfig()) -> BaselineResult:
    """Basis Pursuit by ADMM on the split x = q with x feasible and q carrying the l1 term.

    Stops when ||x - q|| <= primal_tol and penalty * ||q - q_prev|| <= dual_tol
    (both absolute).  Every x iterate is feasible, so on hitting max_iters the
    one with the smallest l1 norm is returned with status ``max_iters``.
    """
    op = PartialHadamard(A, N)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != op.M:
        raise ValueError(f"measurement length {z.size} does not match |A| = {op.M}")
    rho = cfg.penalty

    def project(w):
        return w + op.rmatvec(z - op.matvec(w))

    x = op.rmatvec(z)
    best, best_l1 = x, np.abs(x).sum()
    q = _soft(x, 1.0 / rho)
    u = np.zeros(N)
    status = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        x = project(q - u)
        q_prev = q
        q = _soft(x + u, 1.0 / rho)
        u += x - q
        r_norm = np.linalg.norm(x - q)
        s_norm = rho * np.linalg.norm(q - q_prev)
        if r_norm <= cfg.primal_tol and s_norm <= cfg.dual_tol:
            status = "converged"
            best = x
            break
        l1 = np.abs(x).sum()
        if l1 < best_l1:
            best, best_l1 = x, l1
    if not np.all(np.isfinite(best)):
        return BaselineResult(best, "diverged", np.inf, it)
    if status != "converged":
        log.debug("ADMM stopped after %d iterations without meeting tolerances", it)
    res = float(np.linalg.norm(op.matvec(best) - z))
    return BaselineResult(best, status, res, it)
