"""Resolvent machinery: Green functions, Ward identities, spectral diagnostics."""

import numpy as np
import pytest

from wigneredge.ensembles import goe_spec, gue_spec, sample_matrix
from wigneredge.resolvent import (
    NumericFailure,
    delocalization_check,
    eigen_decompose,
    generalized_ward_ratio,
    green_entries,
    green_matrix,
    green_row,
    im_m_n,
    im_mn_edge_expectation,
    locallaw_deviation,
    m_n,
    rigidity_check,
    ward_check,
)
from wigneredge.semicircle import DomainError, classical_location, m_sc


def _sample(n=50, seed=(21, 0), beta=1):
    spec = goe_spec(n) if beta == 1 else gue_spec(n)
    return eigen_decompose(sample_matrix(spec, seed))


def test_green_matrix_matches_direct_solve_oracle():
    # independent oracle: solve (H - z) G = I with LU instead of eigenvectors
    n = 40
    spec = goe_spec(n)
    h = sample_matrix(spec, (22, 0))
    sample = eigen_decompose(h)
    for z in (0.3 + 0.7j, 2.0 + 0.01j, -2.5 + 0.1j):
        g = green_matrix(sample, z)
        oracle = np.linalg.solve(h - z * np.eye(n), np.eye(n, dtype=complex))
        assert np.abs(g - oracle).max() <= 1e-10


def test_green_row_and_entries_agree_with_matrix():
    sample = _sample(30)
    z = 1.0 + 0.2j
    g = green_matrix(sample, z)
    assert np.allclose(green_row(sample, z, 7), g[7], atol=1e-13)
    pairs = np.array([[0, 0], [3, 11], [29, 5]])
    assert np.allclose(green_entries(sample, z, pairs), g[pairs[:, 0], pairs[:, 1]], atol=1e-13)


def test_m_n_is_trace_of_green_matrix():
    sample = _sample(30)
    z = 0.5 + 0.3j
    g = green_matrix(sample, z)
    assert m_n(sample, z) == pytest.approx(np.trace(g) / 30, abs=1e-13)


def test_im_m_n_consistent_with_m_n():
    sample = _sample(30)
    e, eta = 1.9, 0.05
    assert im_m_n(sample.eigenvalues, e, eta) == pytest.approx(
        m_n(sample, complex(e, eta)).imag, abs=1e-14
    )


@pytest.mark.parametrize("beta", [1, 2])
def test_ward_identity_roundoff_level(beta):
    # sum_j |G_ij|^2 = Im G_ii / eta must hold to roundoff for every row
    sample = _sample(50, beta=beta)
    rng = np.random.default_rng(0)
    for z in (2.0 + 0.005j, 0.0 + 0.5j, -1.5 + 0.05j):
        rows = rng.integers(0, 50, size=17)
        assert ward_check(sample, z, rows) <= 1e-9


def test_ward_check_many_pairs_small_eta():
    sample = _sample(50)
    assert ward_check(sample, 2.0 + 1e-3j, range(50)) <= 1e-9


def test_generalized_ward_ratio_is_order_one():
    sample = _sample(60)
    z = 2.0 + 0.05j
    ratio = generalized_ward_ratio(sample, z, [(0, 1), (5, 40), (12, 12)])
    assert 0.0 < ratio <= 50.0


def test_green_rejects_lower_half_plane():
    sample = _sample(20)
    with pytest.raises(DomainError):
        green_matrix(sample, 1.0 - 0.1j)


def test_eigen_decompose_rejects_non_hermitian():
    with pytest.raises(NumericFailure):
        eigen_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigen_decompose_without_vectors():
    h = sample_matrix(goe_spec(20), (23, 0))
    full = eigen_decompose(h, vectors=True)
    bare = eigen_decompose(h, vectors=False)
    assert bare.eigenvectors is None
    assert np.allclose(full.eigenvalues, bare.eigenvalues, atol=1e-13)
    with pytest.raises(NumericFailure):
        green_matrix(bare, 1.0 + 1.0j)


def test_trace_approaches_semicircle_transform_at_large_n():
    sample = _sample(800, seed=(24, 0))
    for z in (1.0 + 0.5j, 2.2 + 0.3j):
        assert abs(m_n(sample, z) - m_sc(z)) <= 0.05


def test_locallaw_deviation_envelopes_hold():
    spec = goe_spec(100)
    zs = [0.0 + 0.3j, 1.5 + 0.2j, 2.0 + 0.15j]
    stats = locallaw_deviation(spec, [(25, t) for t in range(40)], zs)
    assert (stats.entry_ratio_max <= 20.0).all()
    assert (stats.trace_ratio_max <= 20.0).all()
    assert (stats.entry_ratio_q99 > 0).all()


def test_locallaw_rejects_bad_domain():
    spec = goe_spec(50)
    with pytest.raises(DomainError):
        locallaw_deviation(spec, [(0, 0)], [6.0 + 1.0j])


def test_rigidity_normalized_gaps_bounded():
    n = 400
    sample = _sample(n, seed=(26, 0))
    classical = np.array([classical_location(j, n) for j in range(1, n + 1)])
    gaps = rigidity_check(sample, classical)
    assert gaps.max() <= 30.0


def test_delocalization_order_one():
    sample = _sample(300, seed=(27, 0))
    assert 1.0 <= delocalization_check(sample) <= 50.0


def test_edge_expectation_matches_manual_loop():
    spec = goe_spec(40)
    z = 2.0 + 40.0 ** (-0.8) * 1j
    rep = im_mn_edge_expectation(spec, z, trials=30, master_seed=5)
    manual = np.array(
        [
            im_m_n(np.linalg.eigvalsh(sample_matrix(spec, (5, t))), z.real, z.imag)
            for t in range(30)
        ]
    )
    assert rep.mean == pytest.approx(manual.mean(), abs=1e-14)
    assert rep.scaled_mean == pytest.approx(rep.mean * 40 ** (1.0 / 3.0), abs=1e-14)


def test_edge_expectation_rejects_out_of_domain_z():
    spec = goe_spec(40)
    with pytest.raises(DomainError):
        im_mn_edge_expectation(spec, 2.0 + 1.0j, trials=2)
