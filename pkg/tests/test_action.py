"""Abundance backends, the volume matrix, Strassen, and action assembly.

The independent reference is a brute-force enumerator that intersects
future and past sets pair by pair, never touching matrix products.
"""

import math

import numpy as np
import pytest

from bdlab.action import (
    AbundanceVector,
    ActionCoefficients,
    abundances,
    bd_action,
    bd_action_from_counts,
    parse_coefficients,
    strassen_square,
    volume_histogram,
    volume_matrix,
)
from bdlab.causet import CausalSet, generate
from bdlab.errors import InsufficientAbundances, InvalidParameter


def brute_abundances(c: CausalSet, kmax: int) -> tuple:
    """Interval enumeration oracle: counts[k] = #pairs with |I[i,j]| = k+2."""
    a = c.adjacency
    counts = [0] * (kmax + 1)
    for i in range(c.n):
        for j in range(c.n):
            if not a[i, j]:
                continue
            size = 2 + sum(1 for z in range(c.n) if a[i, z] and a[z, j])
            if size - 2 <= kmax:
                counts[size - 2] += 1
    return tuple(counts)


# -- abundances ------------------------------------------------------------------

def test_two_chain_counts():
    assert abundances(generate(2, "chain"), 3).counts == (1, 0, 0, 0)


def test_three_chain_counts_match_brute_force():
    c = generate(3, "chain")
    expected = brute_abundances(c, 3)
    assert expected == (2, 1, 0, 0)
    for backend in ("naive", "matrix", "strassen"):
        assert abundances(c, 3, backend).counts == expected


def test_backends_agree_on_random_instances():
    for seed in range(8):
        n = 16 + 14 * seed
        c = generate(n, "random_order", seed=seed, p=0.2)
        naive = abundances(c, 3, "naive")
        matrix = abundances(c, 3, "matrix")
        strassen = abundances(c, 3, "strassen")
        assert naive.counts == matrix.counts == strassen.counts
        assert naive.related_pairs == c.related_pairs


def test_backends_match_brute_force_oracle():
    c = generate(20, "random_order", seed=11, p=0.3)
    expected = brute_abundances(c, 5)
    for backend in ("naive", "matrix", "strassen"):
        assert abundances(c, 5, backend).counts == expected


def test_full_histogram_sums_to_edge_count():
    c = generate(40, "random_order", seed=2, p=0.25)
    hist = volume_histogram(c)
    assert sum(hist.counts) == c.related_pairs


def test_relabeling_invariance():
    c = generate(24, "random_order", seed=13, p=0.3)
    rng = np.random.default_rng(0)
    perm = rng.permutation(24)
    shuffled = CausalSet(24, c.adjacency[np.ix_(perm, perm)])
    assert abundances(shuffled, 6).counts == abundances(c, 6).counts


def test_unknown_backend_rejected():
    with pytest.raises(InvalidParameter):
        abundances(generate(3, "chain"), 3, "magic")


def test_abundance_vector_validation():
    with pytest.raises(InvalidParameter):
        AbundanceVector(n=3, counts=(5, 0), related_pairs=3)
    with pytest.raises(InvalidParameter):
        AbundanceVector(n=3, counts=(1, -1), related_pairs=3)


# -- volume matrix -------------------------------------------------------------------

def test_volume_matrix_two_chain():
    v = volume_matrix(generate(2, "chain")).matrix
    assert np.array_equal(v, np.array([[1, 2], [0, 1]]))


def test_volume_matrix_three_chain():
    v = volume_matrix(generate(3, "chain")).matrix
    assert np.array_equal(v, np.array([[1, 2, 3], [0, 1, 2], [0, 0, 1]]))


def test_volume_matrix_antichain_is_identity():
    v = volume_matrix(generate(4, "antichain")).matrix
    assert np.array_equal(v, np.eye(4, dtype=np.int64))


def test_volume_matrix_structure_law():
    c = generate(48, "random_order", seed=5, p=0.2)
    v = volume_matrix(c).matrix
    a = c.adjacency
    assert np.all(np.diagonal(v) == 1)
    assert np.all((v >= 2) == (a == 1))
    off = ~np.eye(c.n, dtype=bool)
    assert np.all((v[off] == 0) | (v[off] >= 2))


def test_strassen_method_equals_schoolbook():
    c = generate(70, "random_order", seed=8, p=0.25)
    assert np.array_equal(volume_matrix(c, "schoolbook").matrix,
                          volume_matrix(c, "strassen").matrix)


def test_strassen_square_random_binary_matrices():
    rng = np.random.default_rng(42)
    for n in (1, 7, 64, 100, 129, 256):
        m = (rng.random((n, n)) < 0.5).astype(np.int64)
        assert np.array_equal(strassen_square(m), m @ m)


# -- action ---------------------------------------------------------------------------

FOUR_D = ActionCoefficients.four_dim_preset


def test_action_antichain():
    ab = abundances(generate(5, "antichain"), 3)
    assert bd_action(ab, FOUR_D()) == pytest.approx(20 / math.sqrt(6), rel=1e-12)


def test_action_three_chain():
    ab = abundances(generate(3, "chain"), 3)
    assert bd_action(ab, FOUR_D()) == pytest.approx(40 / math.sqrt(6), rel=1e-12)


def test_action_two_chain():
    ab = abundances(generate(2, "chain"), 3)
    assert bd_action(ab, FOUR_D()) == pytest.approx(4 / math.sqrt(6), rel=1e-12)


def test_action_length_ratio_scaling():
    ab = abundances(generate(3, "chain"), 3)
    assert bd_action(ab, FOUR_D(length_ratio=2.0)) == pytest.approx(
        4 * bd_action(ab, FOUR_D()), rel=1e-12)


def test_action_requires_enough_layers():
    ab = AbundanceVector(n=3, counts=(2, 1), related_pairs=3)
    with pytest.raises(InsufficientAbundances):
        bd_action(ab, FOUR_D())


def test_general_form_matches_direct_evaluation():
    coeff = ActionCoefficients(d=6, n_d=5, length_ratio=1.5, alpha=2.25,
                               beta=-0.75, coeffs=(1.0, -3.0, 2.0, 0.5, -1.0))
    counts = (4, 2, 1, 0, 3)
    weighted = sum(ck * nk for ck, nk in zip(coeff.coeffs, counts))
    expected = -2.25 * 1.5**4 * (10 + (-0.75 / 2.25) * weighted)
    assert bd_action_from_counts(10, counts, coeff) == pytest.approx(expected, rel=1e-12)


def test_coefficients_validate_layer_count():
    with pytest.raises(InvalidParameter):
        ActionCoefficients(d=6, n_d=4, alpha=1.0, beta=1.0, coeffs=(1, 2, 3, 4))
    with pytest.raises(InvalidParameter):
        ActionCoefficients(d=6, n_d=5, alpha=1.0, beta=1.0, coeffs=(1, 2, 3))
    assert ActionCoefficients(d=3, n_d=3, alpha=1.0, beta=1.0, coeffs=(1, 2, 3)).n_d == 3


def test_coefficient_file_parsing():
    text = "d=6\nn_d=5\nalpha=2.25\nbeta=-0.75\nC=1,-3,2,0.5,-1\nlength_ratio=1.5\n"
    coeff = parse_coefficients(text)
    assert coeff.d == 6 and coeff.coeffs == (1.0, -3.0, 2.0, 0.5, -1.0)
    with pytest.raises(InvalidParameter):
        parse_coefficients("d=4\n")
