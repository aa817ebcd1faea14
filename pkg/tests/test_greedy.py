import numpy as np
import pytest

from spqn.greedy import (
    ApproxState,
    DegenerateCurvature,
    NonPositiveDiagonal,
    SquaredHessian,
    bfgs_update,
    broyden_update,
    dfp_update,
    greedy_index,
    gsr1,
    gsr1_n,
    scale_correction,
    sr1_update,
)
from spqn.linalg import DimensionMismatch, loewner_leq
from spqn.solver import track_eta

from helpers import (
    bfgs_oracle,
    dfp_oracle,
    random_psd,
    random_spd,
    sr1_oracle,
    svd_rank,
)


def basis(d, i):
    u = np.zeros(d)
    u[i] = 1.0
    return u


def make_pair(seed, d, spread=1.0):
    """Seeded (H, Q) with H <= Q via a PSD perturbation."""
    rng = np.random.default_rng(seed)
    h = random_spd(rng, d)
    q = h + random_psd(rng, d, scale=spread)
    return h, q


# ---------------------------------------------------------------- greedy pick

def test_greedy_index_basic():
    assert greedy_index(np.diag([4.0, 2.0]), np.array([1.0, 1.0])) == 0
    assert greedy_index(np.diag([3.0, 3.0]), np.array([1.0, 1.0])) == 0  # tie -> lowest
    assert greedy_index(np.diag([2.0, 8.0]), np.array([1.0, 2.0])) == 1  # ratios 2 vs 4


def test_greedy_index_enumeration_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = int(rng.integers(2, 9))
        q = random_spd(rng, d)
        diag_h = rng.uniform(0.5, 2.0, size=d)
        ratios = [q[i, i] / diag_h[i] for i in range(d)]
        assert greedy_index(q, diag_h) == int(np.argmax(ratios))


def test_greedy_index_rejects_nonpositive_diag():
    with pytest.raises(NonPositiveDiagonal):
        greedy_index(np.eye(2), np.array([1.0, 0.0]))


def test_greedy_index_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        greedy_index(np.eye(2), np.ones(3))


# ------------------------------------------------------------ update formulas

def test_sr1_hand_case():
    q = 2 * np.eye(2)
    u = basis(2, 0)
    out, skipped = sr1_update(q, np.eye(2) @ u, u)
    assert not skipped
    assert np.array_equal(out, np.diag([1.0, 2.0]))


def test_sr1_fixed_point_skips():
    rng = np.random.default_rng(1)
    q = random_spd(rng, 4)
    u = basis(4, 0)
    out, skipped = sr1_update(q, q @ u, u)
    assert skipped
    assert out is q


def test_sr1_matches_oracle_and_drops_rank():
    h, q = make_pair(2, 5)
    u = basis(5, 1)
    out, skipped = sr1_update(q, h @ u, u)
    assert not skipped
    expected = sr1_oracle(q, h, u)
    assert np.allclose(out, expected, rtol=0, atol=1e-12)
    assert svd_rank(out - h) == svd_rank(q - h) - 1


def test_dfp_hand_case():
    q = 2 * np.eye(2)
    u = basis(2, 0)
    out = dfp_update(q, np.eye(2) @ u, u)
    assert np.allclose(out, np.diag([1.0, 2.0]))


def test_dfp_fixed_point():
    rng = np.random.default_rng(3)
    q = random_spd(rng, 5)
    u = rng.standard_normal(5)
    out = dfp_update(q, q @ u, u)
    assert np.allclose(out, q, rtol=0, atol=1e-12 * np.abs(q).max())


def test_dfp_matches_oracle():
    h, q = make_pair(4, 5)
    rng = np.random.default_rng(40)
    u = rng.standard_normal(5)
    assert np.allclose(dfp_update(q, h @ u, u), dfp_oracle(q, h, u),
                       rtol=0, atol=1e-12)


def test_dfp_rejects_degenerate_curvature():
    with pytest.raises(DegenerateCurvature):
        dfp_update(np.eye(2), np.zeros(2), basis(2, 0))


def test_bfgs_hand_case():
    q = 2 * np.eye(2)
    u = basis(2, 0)
    out = bfgs_update(q, np.eye(2) @ u, u)
    assert np.array_equal(out, np.diag([1.0, 2.0]))


def test_bfgs_fixed_point():
    rng = np.random.default_rng(5)
    q = random_spd(rng, 5)
    u = rng.standard_normal(5)
    out = bfgs_update(q, q @ u, u)
    assert np.allclose(out, q, rtol=0, atol=1e-12 * np.abs(q).max())


def test_bfgs_matches_oracle():
    h, q = make_pair(6, 5)
    rng = np.random.default_rng(60)
    u = rng.standard_normal(5)
    assert np.allclose(bfgs_update(q, h @ u, u), bfgs_oracle(q, h, u),
                       rtol=0, atol=1e-12)


def test_bfgs_rejects_degenerate_curvature():
    with pytest.raises(DegenerateCurvature):
        bfgs_update(np.eye(2), -np.ones(2), basis(2, 0))


def test_broyden_endpoints_bit_match():
    h, q = make_pair(7, 4)
    rng = np.random.default_rng(70)
    u = rng.standard_normal(4)
    hu = h @ u
    assert np.array_equal(broyden_update(q, hu, u, 0.0), sr1_update(q, hu, u)[0])
    assert np.array_equal(broyden_update(q, hu, u, 1.0), dfp_update(q, hu, u))


def test_broyden_midpoint_is_mean():
    h, q = make_pair(8, 4)
    rng = np.random.default_rng(80)
    u = rng.standard_normal(4)
    hu = h @ u
    expected = 0.5 * dfp_update(q, hu, u) + 0.5 * sr1_update(q, hu, u)[0]
    assert np.array_equal(broyden_update(q, hu, u, 0.5), expected)


def test_broyden_rejects_bad_tau():
    with pytest.raises(ValueError):
        broyden_update(np.eye(2), np.ones(2), basis(2, 0), 1.5)


def test_update_outputs_exactly_symmetric():
    for seed in range(10):
        h, q = make_pair(seed + 100, 6)
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(6)
        hu = h @ u
        for out in (sr1_update(q, hu, u)[0], dfp_update(q, hu, u),
                    bfgs_update(q, hu, u), broyden_update(q, hu, u, 0.3)):
            assert np.array_equal(out, out.T)


# ------------------------------------------------------- composed greedy ops

def test_gsr1_composes_pick_and_update():
    state = ApproxState(q=np.diag([4.0, 2.0]))
    gsr1(state, SquaredHessian(np.eye(2)))
    assert np.array_equal(state.q, np.diag([1.0, 2.0]))
    assert state.skipped == 0 and state.fact is None


def test_gsr1_at_target_counts_skip():
    rng = np.random.default_rng(9)
    base = random_spd(rng, 4)
    hess_sq = SquaredHessian(base)
    state = ApproxState(q=hess_sq.dense())
    state.refresh()
    gsr1(state, hess_sq)
    assert state.skipped == 1
    assert state.fact is not None  # unchanged Q keeps its factorization


def test_gsr1_recovers_target_in_dim_steps_d3():
    rng = np.random.default_rng(10)
    base = random_spd(rng, 3)
    hess_sq = SquaredHessian(base)
    h = hess_sq.dense()
    state = ApproxState(q=np.linalg.eigvalsh(h)[-1] * np.eye(3))
    for _ in range(3):
        gsr1(state, hess_sq)
    assert np.linalg.norm(state.q - h) <= 1e-9 * np.linalg.norm(h)


def test_gsr1_n_zero_is_noop():
    rng = np.random.default_rng(11)
    q = random_spd(rng, 4)
    state = ApproxState(q=q)
    gsr1_n(state, SquaredHessian(np.eye(4)), 0)
    assert state.q is q and state.skipped == 0


def test_gsr1_n_full_recovery_d10():
    rng = np.random.default_rng(12)
    base = random_spd(rng, 10)
    hess_sq = SquaredHessian(base)
    h = hess_sq.dense()
    lip_sq = np.linalg.eigvalsh(h)[-1]
    state = ApproxState(q=lip_sq * np.eye(10))
    gsr1_n(state, hess_sq, 10)
    assert np.linalg.norm(state.q - h) <= 1e-8 * np.linalg.norm(h)


def test_gsr1_n_hand_iteration_d2():
    state = ApproxState(q=np.diag([4.0, 3.0]))
    gsr1_n(state, SquaredHessian(np.eye(2)), 2)
    assert np.array_equal(state.q, np.eye(2))


def test_gsr1_n_rejects_negative_count():
    with pytest.raises(ValueError):
        gsr1_n(ApproxState(q=np.eye(2)), SquaredHessian(np.eye(2)), -1)


def test_scale_correction_zero_is_bitwise_noop():
    rng = np.random.default_rng(13)
    q = random_spd(rng, 4)
    state = ApproxState(q=q)
    state.refresh()
    fact = state.fact
    scale_correction(state, 0.0, 123.4)
    assert state.q is q and state.fact is fact


def test_scale_correction_doubles_entries():
    state = ApproxState(q=np.diag([1.0, 3.0]))
    scale_correction(state, 1.0, 1.0)
    assert np.array_equal(state.q, np.diag([2.0, 6.0]))


def test_scale_correction_lemma_constant_case():
    # kappa = 2, lip_hess = 0.5, lip_grad = 1 gives coefficient 4;
    # a move of norm 0.25 then scales by exactly 2.
    m_coef = 2.0 * 2.0**2 * 0.5 / 1.0
    assert m_coef == 4.0
    state = ApproxState(q=np.eye(3))
    state.refresh()
    scale_correction(state, m_coef, 0.25)
    assert np.array_equal(state.q, 2.0 * np.eye(3))
    rebuilt = state.fact.lower @ state.fact.lower.T
    assert np.allclose(rebuilt, state.q, rtol=0, atol=1e-14)


def test_scale_correction_rejects_negative():
    with pytest.raises(ValueError):
        scale_correction(ApproxState(q=np.eye(2)), -1.0, 0.5)


# ----------------------------------------------------------------- invariants

def test_sandwich_preserved_by_gsr1():
    # H <= Q <= eta H survives a greedy SR1 update, 100 trials per dimension.
    for d in (5, 20):
        for trial in range(100):
            h, q = make_pair(1000 * d + trial, d)
            eta = track_eta(q, h)
            state = ApproxState(q=q.copy())
            base = _sqrt_spd(h)
            gsr1(state, SquaredHessian(base))
            assert loewner_leq(h, state.q, 1e-8)
            assert loewner_leq(state.q, eta * h, 1e-8)


def _sqrt_spd(h):
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.sqrt(w)) @ v.T


def test_rank_decreases_by_one_per_applied_update():
    h, q = make_pair(14, 6)
    base = _sqrt_spd(h)
    hess_sq = SquaredHessian(base)
    h_dense = hess_sq.dense()
    state = ApproxState(q=q)
    sigma_ref = np.linalg.svd(q - h_dense, compute_uv=False)[0]
    previous = svd_rank(state.q - h_dense, ref=sigma_ref)
    for _ in range(6):
        skips_before = state.skipped
        gsr1(state, hess_sq)
        current = svd_rank(state.q - h_dense, ref=sigma_ref)
        if state.skipped == skips_before:
            assert current == previous - 1
        else:
            assert current == previous
        previous = current


def test_finite_recovery_bounded_by_dimension():
    for d in (3, 10, 20):
        h, q = make_pair(15 + d, d)
        base = _sqrt_spd(h)
        hess_sq = SquaredHessian(base)
        h_dense = hess_sq.dense()
        state = ApproxState(q=q)
        applied = 0
        while (np.linalg.norm(state.q - h_dense) > 1e-8 * np.linalg.norm(h_dense)
               and applied < 2 * d):
            before = state.skipped
            gsr1(state, hess_sq)
            if state.skipped == before:
                applied += 1
        assert applied <= d
        assert np.linalg.norm(state.q - h_dense) <= 1e-8 * np.linalg.norm(h_dense)


def test_squared_hessian_diag_and_matvec_match_dense():
    rng = np.random.default_rng(16)
    base = random_spd(rng, 7) - 1.5 * np.eye(7)  # indefinite base
    hess_sq = SquaredHessian(base)
    dense = hess_sq.dense()
    assert np.allclose(hess_sq.diag, np.diag(dense), rtol=0, atol=1e-12)
    u = rng.standard_normal(7)
    assert np.allclose(hess_sq.matvec(u), dense @ u, rtol=0, atol=1e-12)
