"""Shared construction helpers and independent oracles for the test suite."""

import numpy as np

from spqn.linalg import symmetrize


def random_spd(rng, d, lo=0.5, hi=3.0):
    """SPD matrix with eigenvalues drawn uniformly from [lo, hi]."""
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = rng.uniform(lo, hi, size=d)
    return symmetrize(basis @ np.diag(eigs) @ basis.T)


def random_spd_cond(rng, d, cond):
    """SPD matrix with eigenvalues log-spaced to the given condition number."""
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = np.logspace(0.0, np.log10(cond), d)
    return symmetrize(basis @ np.diag(eigs) @ basis.T)


def random_psd(rng, d, scale=1.0):
    """Full-rank (almost surely) PSD perturbation G G^T."""
    g = rng.standard_normal((d, d)) * scale
    return symmetrize(g @ g.T)


def random_symmetric(rng, d, scale=1.0):
    return symmetrize(rng.standard_normal((d, d)) * scale)


def svd_rank(m, threshold=1e-9, ref=None):
    """Numerical rank: singular values above threshold * ref.

    ``ref`` defaults to the matrix's own largest singular value; passing a
    fixed reference keeps the cutoff meaningful for near-zero differences.
    """
    s = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    cutoff = threshold * (s[0] if ref is None else ref)
    return int(np.sum(s > cutoff))


def sr1_oracle(q, h, u):
    """SR1 formula evaluated directly from dense Q and H."""
    diff = q - h
    du = diff @ u
    return q - np.outer(du, du) / float(u @ du)


def dfp_oracle(q, h, u):
    """DFP formula evaluated directly from dense Q and H."""
    hu, qu = h @ u, q @ u
    uhu, uqu = float(u @ hu), float(u @ qu)
    return (q - (np.outer(hu, qu) + np.outer(qu, hu)) / uhu
            + (1.0 + uqu / uhu) * np.outer(hu, hu) / uhu)


def bfgs_oracle(q, h, u):
    """BFGS formula evaluated directly from dense Q and H."""
    hu, qu = h @ u, q @ u
    return q - np.outer(qu, qu) / float(u @ qu) + np.outer(hu, hu) / float(u @ hu)


def eta_oracle(q, h):
    """Largest eigenvalue of H^{-1/2} Q H^{-1/2} via an explicit square root."""
    w, v = np.linalg.eigh(h)
    inv_sqrt = v @ np.diag(1.0 / np.sqrt(w)) @ v.T
    return float(np.linalg.eigvalsh(inv_sqrt @ q @ inv_sqrt)[-1])


def squared_hessian_dense(problem, z):
    """Dense squared Hessian at z, built independently of the solver path."""
    base = problem.hessian(z)
    return symmetrize(base @ base)
