"""Concrete saddle objectives with closed-form derivatives.

Three problems, all on the stacked variable z = [x; y]:

* ``QuadraticSaddle`` -- a synthetic strongly-convex-strongly-concave
  quadratic with known constants and a computable saddle point; the main
  desk-scale verification instance.
* ``AucProblem`` -- the minimax surrogate for AUC maximization on a binary
  dataset.  Quadratic in z, so its Hessian is constant (lip_hess = 0).
* ``DebiasProblem`` -- adversarially debiased logistic regression with a
  scalar adversary variable; non-quadratic, constants are estimated by
  sampling.

Finite-difference helpers at the bottom serve as derivative oracles in
tests and are not used on any solver path.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import expit

from .linalg import DimensionMismatch, eig_extremes, symmetrize
from .solver import SaddleProblem

DEFAULT_LAMBDA_REG = 1e-2
DEFAULT_GAMMA = 1e-2
DEFAULT_BETA_REG = 0.5


class QuadraticSaddle(SaddleProblem):
    """f(x, y) = x^T A x / 2 + x^T B y - y^T C y / 2 + a^T x + c^T y.

    A and C must be SPD.  The Hessian is the constant block matrix
    [[A, B], [B^T, -C]]; the stored constants are recomputed exactly from
    it at construction.
    """

    def __init__(self, block_x, coupling, block_y, lin_x=None, lin_y=None):
        a = symmetrize(block_x)
        c = symmetrize(block_y)
        b = np.atleast_2d(np.asarray(coupling, dtype=float))
        if b.shape != (a.shape[0], c.shape[0]):
            raise DimensionMismatch(
                f"coupling shape {b.shape} does not match blocks "
                f"({a.shape[0]}, {c.shape[0]})"
            )
        self.block_x = a
        self.coupling = b
        self.block_y = c
        self.dim_x = a.shape[0]
        self.dim_y = c.shape[0]
        self.lin = np.zeros(self.dim)
        if lin_x is not None:
            self.lin[: self.dim_x] = np.asarray(lin_x, dtype=float)
        if lin_y is not None:
            self.lin[self.dim_x:] = np.asarray(lin_y, dtype=float)

        hess = np.zeros((self.dim, self.dim))
        hess[: self.dim_x, : self.dim_x] = a
        hess[: self.dim_x, self.dim_x:] = b
        hess[self.dim_x:, : self.dim_x] = b.T
        hess[self.dim_x:, self.dim_x:] = -c
        self._hess = hess

        lo_a, _ = eig_extremes(a)
        lo_c, _ = eig_extremes(c)
        lo_h, hi_h = eig_extremes(hess)
        self.mu = min(lo_a, lo_c)
        self.lip_grad = max(abs(lo_h), abs(hi_h))
        self.lip_hess = 0.0
        self.constants_exact = True

    def _split(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise DimensionMismatch(f"z shape {z.shape}, expected ({self.dim},)")
        return z, z[: self.dim_x], z[self.dim_x:]

    def value(self, z) -> float:
        z, x, y = self._split(z)
        return float(
            0.5 * x @ self.block_x @ x
            + x @ self.coupling @ y
            - 0.5 * y @ self.block_y @ y
            + self.lin @ z
        )

    def gradient(self, z) -> np.ndarray:
        z, _, _ = self._split(z)
        return self._hess @ z + self.lin

    def hessian(self, z) -> np.ndarray:
        self._split(z)
        return self._hess

    def saddle_point(self) -> np.ndarray:
        """The unique stationary point, root of the gradient."""
        return np.linalg.solve(self._hess, -self.lin)


def quadratic_make(seed, dim_x, dim_y, mu, lip_grad, linear_scale=0.0) -> QuadraticSaddle:
    """Seeded random instance with block eigenvalues in [mu, 0.9 * lip_grad]
    and the coupling scaled so the full Hessian norm stays at or below
    lip_grad.  With mu == lip_grad the coupling budget is zero, giving the
    pure separable quadratic.  linear_scale > 0 moves the saddle away from
    the origin.
    """
    if not 0 < mu <= lip_grad:
        raise ValueError(f"need 0 < mu <= lip_grad, got mu={mu}, lip_grad={lip_grad}")
    rng = np.random.default_rng(seed)

    def random_block(d):
        basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
        hi = max(mu, 0.9 * lip_grad)
        eigs = rng.uniform(mu, hi, size=d) if hi > mu else np.full(d, mu)
        return symmetrize(basis @ np.diag(eigs) @ basis.T)

    a = random_block(dim_x)
    c = random_block(dim_y)
    budget = lip_grad - max(eig_extremes(a)[1], eig_extremes(c)[1])
    b = np.zeros((dim_x, dim_y))
    if budget > 0:
        b = rng.standard_normal((dim_x, dim_y))
        b *= budget / np.linalg.norm(b, 2)
    lin_x = lin_y = None
    if linear_scale > 0:
        lin_x = linear_scale * rng.standard_normal(dim_x)
        lin_y = linear_scale * rng.standard_normal(dim_y)
    return QuadraticSaddle(a, b, c, lin_x, lin_y)


class AucProblem(SaddleProblem):
    """Minimax surrogate for AUC maximization.

    Variables: x = [w; u; v] (linear scorer plus per-class score centers)
    and a scalar adversary y.  Positive samples are weighted by (1 - p)
    and negative samples by p, where p is the fraction of positive labels.
    The objective is quadratic in z, so the Hessian is constant; all
    curvature constants are computed exactly at construction.
    """

    def __init__(self, features, labels, lambda_reg=DEFAULT_LAMBDA_REG):
        feats = np.asarray(features, dtype=float)
        labels = np.asarray(labels)
        if feats.ndim != 2 or labels.shape != (feats.shape[0],):
            raise DimensionMismatch("features must be (m, d) with one label per row")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be in {+1, -1}")
        if lambda_reg <= 0:
            raise ValueError(f"lambda_reg must be positive, got {lambda_reg}")
        m = feats.shape[0]
        pos = labels > 0
        p = float(np.count_nonzero(pos)) / m
        if not 0.0 < p < 1.0:
            raise ValueError("need both classes present, got positive fraction "
                             f"{p}")

        self.features = feats
        self.labels = np.where(pos, 1, -1).astype(np.int64)
        self.lambda_reg = float(lambda_reg)
        self.p = p
        self.n_samples = m
        n_feat = feats.shape[1]
        self.dim_x = n_feat + 2
        self.dim_y = 1

        self._feats_pos = feats[pos]
        self._feats_neg = feats[~pos]
        self._sum_pos = self._feats_pos.sum(axis=0)
        self._sum_neg = self._feats_neg.sum(axis=0)
        self._hess = self._build_hessian()

        lo_xx, _ = eig_extremes(self._hess[: self.dim_x, : self.dim_x])
        lo_h, hi_h = eig_extremes(self._hess)
        self.mu = min(lo_xx, 2 * p * (1 - p))
        self.lip_grad = max(abs(lo_h), abs(hi_h))
        self.lip_hess = 0.0
        self.constants_exact = True

    def _build_hessian(self):
        m, p, lam = self.n_samples, self.p, self.lambda_reg
        n_feat = self.features.shape[1]
        d = self.dim
        iu, iv, iy = n_feat, n_feat + 1, n_feat + 2
        h = np.zeros((d, d))
        h[:n_feat, :n_feat] = (
            2 * (1 - p) * self._feats_pos.T @ self._feats_pos
            + 2 * p * self._feats_neg.T @ self._feats_neg
        ) / m
        h[:n_feat, iu] = -2 * (1 - p) * self._sum_pos / m
        h[:n_feat, iv] = -2 * p * self._sum_neg / m
        h[:n_feat, iy] = (-2 * (1 - p) * self._sum_pos + 2 * p * self._sum_neg) / m
        h[iu, iu] = 2 * (1 - p) * self._feats_pos.shape[0] / m
        h[iv, iv] = 2 * p * self._feats_neg.shape[0] / m
        h[iy, iy] = -2 * p * (1 - p)
        h[np.arange(iy), np.arange(iy)] += lam
        lower = np.tril_indices(d, -1)
        h[lower] = h.T[lower]
        return h

    def _split(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise DimensionMismatch(f"z shape {z.shape}, expected ({self.dim},)")
        n_feat = self.features.shape[1]
        return z[:n_feat], z[n_feat], z[n_feat + 1], z[n_feat + 2]

    def value(self, z) -> float:
        w, u, v, y = self._split(z)
        p, m = self.p, self.n_samples
        tp = self._feats_pos @ w
        tn = self._feats_neg @ w
        data = (
            (1 - p) * np.sum((tp - u) ** 2 - 2 * (1 + y) * tp)
            + p * np.sum((tn - v) ** 2 + 2 * (1 + y) * tn)
        ) / m
        x_sq = w @ w + u * u + v * v
        return float(data + 0.5 * self.lambda_reg * x_sq - p * (1 - p) * y * y)

    def gradient(self, z) -> np.ndarray:
        w, u, v, y = self._split(z)
        p, m, lam = self.p, self.n_samples, self.lambda_reg
        tp = self._feats_pos @ w
        tn = self._feats_neg @ w
        g = np.empty(self.dim)
        n_feat = self.features.shape[1]
        g[:n_feat] = (
            2 * (1 - p) * (self._feats_pos.T @ (tp - u) - (1 + y) * self._sum_pos)
            + 2 * p * (self._feats_neg.T @ (tn - v) + (1 + y) * self._sum_neg)
        ) / m + lam * w
        g[n_feat] = -2 * (1 - p) * np.sum(tp - u) / m + lam * u
        g[n_feat + 1] = -2 * p * np.sum(tn - v) / m + lam * v
        g[n_feat + 2] = (
            (-2 * (1 - p) * np.sum(tp) + 2 * p * np.sum(tn)) / m
            - 2 * p * (1 - p) * y
        )
        return g

    def hessian(self, z) -> np.ndarray:
        self._split(z)
        return self._hess


class DebiasProblem(SaddleProblem):
    """Adversarially debiased logistic regression.

    x is the linear model, the scalar y scales a protected-attribute
    adversary acting on the same scores.  Log-sum-exp terms are evaluated
    in stable form, so scores with magnitude up to several hundred are
    safe.  Curvature constants are estimated by sampling at construction;
    the strong-convexity estimate is floored at the regularization-based
    bound and a warning is issued if sampling ever dips below it.
    """

    def __init__(self, features, labels, protected,
                 lambda_reg=DEFAULT_LAMBDA_REG, gamma=DEFAULT_GAMMA,
                 beta_reg=DEFAULT_BETA_REG,
                 constant_samples=32, constant_seed=0, constant_spread=0.5):
        feats = np.asarray(features, dtype=float)
        labels = np.asarray(labels)
        protected = np.asarray(protected)
        m = feats.shape[0]
        if feats.ndim != 2 or labels.shape != (m,) or protected.shape != (m,):
            raise DimensionMismatch("features (m, d), labels (m,), protected (m,)")
        if not np.all(np.isin(labels, (-1, 1))) or not np.all(np.isin(protected, (-1, 1))):
            raise ValueError("labels and protected attribute must be in {+1, -1}")
        if lambda_reg <= 0 or gamma <= 0 or beta_reg < 0:
            raise ValueError("need lambda_reg > 0, gamma > 0, beta_reg >= 0")

        self.features = feats
        self.labels = labels.astype(np.int64)
        self.protected = protected.astype(np.int64)
        self.lambda_reg = float(lambda_reg)
        self.gamma = float(gamma)
        self.beta_reg = float(beta_reg)
        self.n_samples = m
        self.dim_x = feats.shape[1]
        self.dim_y = 1
        self.constants_exact = False

        self.mu, self.lip_grad, self.lip_hess = estimate_constants(
            self, np.zeros(self.dim), n_samples=constant_samples,
            seed=constant_seed, spread=constant_spread)

    def _split(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise DimensionMismatch(f"z shape {z.shape}, expected ({self.dim},)")
        return z[: self.dim_x], z[self.dim_x]

    def value(self, z) -> float:
        x, y = self._split(z)
        t = self.features @ x
        fit = np.logaddexp(0.0, -self.labels * t)
        adv = np.logaddexp(0.0, -self.protected * t * y)
        data = np.mean(fit - self.beta_reg * adv)
        return float(data + self.lambda_reg * (x @ x) - self.gamma * y * y)

    def gradient(self, z) -> np.ndarray:
        x, y = self._split(z)
        b, c, beta = self.labels, self.protected, self.beta_reg
        t = self.features @ x
        sig_fit = expit(-b * t)
        sig_adv = expit(-c * t * y)
        g = np.empty(self.dim)
        coeff = -b * sig_fit + beta * c * y * sig_adv
        g[: self.dim_x] = self.features.T @ coeff / self.n_samples + 2 * self.lambda_reg * x
        g[self.dim_x] = (
            beta * np.sum(c * t * sig_adv) / self.n_samples - 2 * self.gamma * y
        )
        return g

    def hessian(self, z) -> np.ndarray:
        x, y = self._split(z)
        b, c, beta = self.labels, self.protected, self.beta_reg
        feats = self.features
        m = self.n_samples
        t = feats @ x
        s = c * t * y
        w_fit = expit(b * t) * expit(-b * t)
        w_adv = expit(s) * expit(-s)
        d = self.dim
        h = np.zeros((d, d))
        xx_weights = (w_fit - beta * y * y * w_adv) / m
        h[: self.dim_x, : self.dim_x] = feats.T @ (feats * xx_weights[:, None])
        h[np.arange(self.dim_x), np.arange(self.dim_x)] += 2 * self.lambda_reg
        xy = feats.T @ (
            (-beta * w_adv * t * y + beta * c * expit(-s)) / m
        )
        h[: self.dim_x, self.dim_x] = xy
        h[self.dim_x, : self.dim_x] = xy
        h[self.dim_x, self.dim_x] = (
            -beta * np.sum(w_adv * t * t) / m - 2 * self.gamma
        )
        return symmetrize(h)

    def regularization_floor(self) -> tuple[float, float]:
        return self.lambda_reg, 2 * self.gamma


def spectral_norm(a, iters=200, tol=1e-12) -> float:
    """Largest absolute eigenvalue of a symmetric matrix by power iteration."""
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    x = np.full(d, 1.0 / np.sqrt(d))
    prev = 0.0
    for _ in range(iters):
        ax = a @ x
        norm = float(np.linalg.norm(ax))
        if norm == 0.0:
            return 0.0
        x = ax / norm
        if abs(norm - prev) <= tol * norm:
            break
        prev = norm
    return float(np.linalg.norm(a @ x))


def estimate_constants(problem, z0, n_samples=32, seed=0, spread=1.0):
    """Estimate (mu, lip_grad, lip_hess) for a problem by sampling.

    Problems with exactly known constants (flagged ``constants_exact``)
    return them unchanged.  Otherwise: the gradient Lipschitz constant is
    the largest sampled Hessian spectral norm; the strong convexity
    modulus is the smallest sampled block curvature, floored at the
    regularization bound; the Hessian Lipschitz constant is the largest
    sampled difference quotient (declared exactly zero for constant
    Hessians).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    if getattr(problem, "constants_exact", False):
        return problem.mu, problem.lip_grad, problem.lip_hess

    rng = np.random.default_rng(seed)
    z0 = np.asarray(z0, dtype=float)
    dx = problem.dim_x
    points = [z0] + [z0 + spread * rng.standard_normal(problem.dim)
                     for _ in range(n_samples)]
    hessians = [problem.hessian(z) for z in points]

    lip_grad = max(spectral_norm(h) for h in hessians)
    block_curv = min(
        min(eig_extremes(h[:dx, :dx])[0], -eig_extremes(h[dx:, dx:])[1])
        for h in hessians
    )
    x_floor, y_floor = problem.regularization_floor()
    floor = min(x_floor, y_floor)
    if block_curv < floor:
        warnings.warn(
            f"sampled curvature {block_curv:.3e} dips below the regularization "
            f"floor {floor:.3e}; the objective may not be strongly "
            "convex-concave on the sampled region", stacklevel=2)
    mu = max(block_curv, floor)

    lip_hess = 0.0
    for za, ha, zb, hb in zip(points, hessians, points[1:], hessians[1:]):
        gap = float(np.linalg.norm(zb - za))
        if gap > 0:
            lip_hess = max(lip_hess, spectral_norm(hb - ha) / gap)
    return mu, lip_grad, lip_hess


def finite_diff_gradient(problem, z, step=None) -> np.ndarray:
    """Central-difference gradient of the objective value (test oracle)."""
    z = np.asarray(z, dtype=float)
    h = step if step is not None else 1e-5 * (np.linalg.norm(z) + 1.0)
    g = np.empty(z.shape[0])
    for i in range(z.shape[0]):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (problem.value(zp) - problem.value(zm)) / (2 * h)
    return g


def finite_diff_hessian(problem, z, step=None) -> np.ndarray:
    """Central-difference Hessian from the gradient (test oracle)."""
    z = np.asarray(z, dtype=float)
    h = step if step is not None else 1e-5 * (np.linalg.norm(z) + 1.0)
    d = z.shape[0]
    out = np.empty((d, d))
    for i in range(d):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        out[:, i] = (problem.gradient(zp) - problem.gradient(zm)) / (2 * h)
    return symmetrize(out)
