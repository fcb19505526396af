"""Independent reference computations used by the tests.

Nothing here calls the f/g recursion; the conditional laws of Y = H_n X for a
Bernoulli-Gaussian source are obtained by enumerating which coordinates of X
are continuous and conditioning the resulting (degenerate) Gaussian vectors.
"""

import itertools
import math

import numpy as np

from analog_polar.hadamard import dense_hadamard


def _pinv_tol(S):
    return 1e-9 * max(1.0, float(np.abs(S).max()) if S.size else 1.0)


def brute_force_conditional(y_prefix, k, n, rho, sigma2=1.0):
    """Law of Y_k given Y^{k-1} = y_prefix for X i.i.d. (1-rho) d_0 + rho N(0, sigma2).

    Returns (atoms: dict location -> mass, continuous_mass).  k is 1-based.
    Among latent patterns consistent with the prefix only those of minimal
    support dimension carry posterior mass.
    """
    N = 1 << n
    H = dense_hadamard(n)
    y_prefix = np.asarray(y_prefix, dtype=float)
    p = k - 1
    cands = []
    for bits in itertools.product((0, 1), repeat=N):
        S = [i for i in range(N) if bits[i]]
        prior = rho ** len(S) * (1 - rho) ** (N - len(S))
        if prior == 0:
            continue
        B = H[:, S] * math.sqrt(sigma2)
        Sig = B @ B.T
        Spp = Sig[:p, :p]
        if p:
            w, V = np.linalg.eigh(Spp)
            tol = _pinv_tol(Spp)
            pos = w > tol
            r = int(pos.sum())
            # consistency: prefix must lie in the range of Spp
            null = V[:, ~pos]
            if null.size and np.abs(null.T @ y_prefix).max() > 1e-7 * max(1.0, np.abs(y_prefix).max()):
                continue
            Vr, wr = V[:, pos], w[pos]
            coef = Vr.T @ y_prefix
            logdens = -0.5 * (r * math.log(2 * math.pi) + np.log(wr).sum() + (coef**2 / wr).sum())
            Spinv = (Vr / wr) @ Vr.T
            mean = Sig[p, :p] @ Spinv @ y_prefix
            var = Sig[p, p] - Sig[p, :p] @ Spinv @ Sig[:p, p]
        else:
            r, logdens, mean, var = 0, 0.0, 0.0, Sig[0, 0]
        cands.append((r, math.log(prior) + logdens, mean, max(var, 0.0)))
    rmin = min(c[0] for c in cands)
    cands = [c for c in cands if c[0] == rmin]
    lw = np.array([c[1] for c in cands])
    w = np.exp(lw - lw.max())
    w /= w.sum()
    atoms = {}
    cont = 0.0
    for wi, (_, _, mean, var) in zip(w, cands):
        if var <= 1e-9:
            key = round(float(mean), 7)
            atoms[key] = atoms.get(key, 0.0) + wi
        else:
            cont += wi
    return atoms, cont


def rid_tree_enumerate(d0, n):
    """RID of every leaf by walking each bit path explicitly."""
    out = []
    for k in range(1 << n):
        d = d0
        for b in range(n - 1, -1, -1):
            bit = (k >> b) & 1
            d = d * d if bit else 2 * d - d * d
        out.append(d)
    return np.array(out)


def reference_amp(Phi, z, rho, sigma2, iters=200, x0=None):
    """Plain AMP on an explicit matrix with unit-norm-ish columns.

    The denoiser is written from the two-component posterior directly
    (scipy normal densities, no log-odds), and its derivative from the
    posterior variance identity  d/dv E[X|v] = Var[X|v] / tau2.
    """
    from scipy import stats

    M, N = Phi.shape
    x = np.zeros(N) if x0 is None else x0.copy()
    r = z - Phi @ x
    for _ in range(iters):
        tau2 = max(float(r @ r) / M, 1e-30)
        v = x + Phi.T @ r
        slab = rho * stats.norm.pdf(v, 0.0, math.sqrt(sigma2 + tau2))
        spike = (1 - rho) * stats.norm.pdf(v, 0.0, math.sqrt(tau2))
        tot = slab + spike
        pi = np.divide(slab, tot, out=np.zeros_like(tot), where=tot > 0)
        # fall back to the larger exponent where both densities underflow
        pi[tot == 0] = 1.0
        s = sigma2 / (sigma2 + tau2)
        mean_slab = s * v
        var_slab = s * tau2
        post_mean = pi * mean_slab
        post_var = pi * (var_slab + mean_slab**2) - post_mean**2
        x_new = post_mean
        r = z - Phi @ x_new + (post_var / tau2).sum() / M * r
        x = x_new
    return x
