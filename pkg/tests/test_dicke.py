import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_state
from dicke_battery.dicke import (
    degeneracy,
    dicke_states,
    enumerate_sectors,
    ladder_coefficients,
    product_gibbs_sector_weights,
    schur_transform,
    to_j2,
)
from dicke_battery.liouville import lowering_operators
from dicke_battery.oracle import product_state
from dicke_battery.steady import FullState, project_to_blocks


def test_sector_lists():
    assert enumerate_sectors(1) == [(Fraction(1, 2), 1)]
    assert enumerate_sectors(3) == [(Fraction(3, 2), 1), (Fraction(1, 2), 2)]
    assert enumerate_sectors(4) == [(2, 1), (1, 3), (0, 2)]


@pytest.mark.parametrize("n", range(1, 21))
def test_dimension_sum_rule(n):
    assert sum(nu * int(2 * j + 1) for j, nu in enumerate_sectors(n)) == 2**n


def test_degeneracy_is_exact_for_large_n():
    n = 64
    total = sum(degeneracy(n, j2) * (j2 + 1) for j2 in range(n, -1, -2))
    assert total == 2**64
    assert isinstance(degeneracy(n, 0), int)


@pytest.mark.parametrize("bad", [0, 65, -3])
def test_enumerate_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        enumerate_sectors(bad)


def test_ladder_examples():
    half = ladder_coefficients(Fraction(1, 2))
    assert half.a.tolist() == [0, 1] and half.b.tolist() == [1, 0]
    one = ladder_coefficients(1)
    assert one.a.tolist() == [0, 2, 2] and one.b.tolist() == [2, 2, 0]


@pytest.mark.parametrize("n", [2, 5, 8])
def test_symmetric_ladder_matches_jplus_jminus(n):
    c = ladder_coefficients(Fraction(n, 2))
    k = np.arange(n + 1)
    assert np.allclose(c.a, k * (n - k + 1))


@pytest.mark.parametrize("bad", [-1, 0.3, Fraction(1, 3)])
def test_ladder_rejects_non_half_integers(bad):
    with pytest.raises(ValueError):
        ladder_coefficients(bad)


@given(st.integers(0, 60))
def test_ladder_ends_annihilate(j2):
    c = ladder_coefficients(Fraction(j2, 2))
    assert c.a[0] == 0 and c.b[-1] == 0
    assert (c.a >= 0).all() and (c.b >= 0).all()
    assert to_j2(Fraction(j2, 2)) == j2


def test_schur_single_qubit_is_identity():
    assert np.array_equal(schur_transform(1).matrix, np.eye(2))


def test_schur_two_qubits_matches_triplet_singlet_basis():
    s = 1 / math.sqrt(2)
    expected = np.array([[1, 0, 0, 0], [0, s, 0, s], [0, s, 0, -s], [0, 0, 1, 0]])
    t = schur_transform(2)
    assert np.allclose(t.matrix, expected, atol=1e-15)
    assert t.ordering == ((2, 1, -2), (2, 1, 0), (2, 1, 2), (0, 1, 0))


def test_schur_three_qubit_doublets():
    # basis order |q1 q2 q3>, index = 4 q1 + 2 q2 + q3
    e = np.eye(8)
    expected = [
        (e[1] + e[2] - 2 * e[4]) / math.sqrt(6),
        (2 * e[3] - e[5] - e[6]) / math.sqrt(6),
        (e[1] - e[2]) / math.sqrt(2),
        (e[5] - e[6]) / math.sqrt(2),
    ]
    u = schur_transform(3).matrix
    for col, vec in zip(range(4, 8), expected):
        assert np.allclose(u[:, col], vec, atol=1e-15)


@pytest.mark.parametrize("n", range(1, 9))
def test_schur_unitary(n):
    u = schur_transform(n).matrix
    assert np.abs(u.T @ u - np.eye(2**n)).max() < 1e-12


@pytest.mark.parametrize("n", range(2, 7))
def test_collective_ladders_are_block_diagonal(n):
    t = schur_transform(n)
    jm, _ = lowering_operators(n)
    inside = t.matrix.T @ jm.toarray() @ t.matrix
    mask = np.zeros_like(inside, dtype=bool)
    for sl in t.block_slices().values():
        mask[sl, sl] = True
    assert np.abs(inside[~mask]).max(initial=0) < 1e-12
    # inside each block J_- is the standard ladder with +sqrt(A_m)
    for (j2, _), sl in t.block_slices().items():
        a = ladder_coefficients(Fraction(j2, 2)).a
        assert np.allclose(inside[sl, sl], np.diag(np.sqrt(a[1:]), 1), atol=1e-12)


def test_schur_cap():
    with pytest.raises(ValueError):
        schur_transform(13)


def test_gibbs_weights_examples():
    w = {c.j2: c.trace for c in product_gibbs_sector_weights(2, 1.0)}
    assert w == pytest.approx({2: 0.75, 0: 0.25}, abs=1e-15)
    w = {c.j2: c.trace for c in product_gibbs_sector_weights(2, 0.0)}
    assert w == {2: 1.0, 0: 0.0}
    w = {c.j2: c.trace for c in product_gibbs_sector_weights(2, 0.5)}
    assert w[2] == pytest.approx(7 / 9, abs=1e-15) and w[0] == pytest.approx(2 / 9, abs=1e-15)
    with pytest.raises(ValueError):
        product_gibbs_sector_weights(2, 1.5)


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("q", [0.0, 0.3, 0.8, 1.0])
def test_gibbs_weights_match_explicit_projection(n, q):
    rho = product_state(n, np.diag([1.0, q]) / (1 + q))
    blocks = project_to_blocks(FullState(rho))
    for chi, block in zip(product_gibbs_sector_weights(n, q), blocks.blocks):
        assert chi.j2 == block.j2
        assert np.abs(chi.dense() - block.chi.dense()).max() < 1e-12


def test_gibbs_weights_sum_to_one_at_scale():
    for q in [0.1, 0.5, 1.0]:
        assert sum(c.trace for c in product_gibbs_sector_weights(60, q)) == pytest.approx(1.0, abs=1e-12)


def test_projection_of_worked_two_qubit_state():
    psi = np.array([1, 1, -1, 0]) / math.sqrt(3)  # (|00> + |01> - |10>)/sqrt 3
    w = project_to_blocks(FullState.pure(psi)).weights
    assert w[2] == pytest.approx(1 / 3, abs=1e-14)
    assert w[0] == pytest.approx(2 / 3, abs=1e-14)


def test_projection_of_ground_state():
    w = project_to_blocks(FullState.ground(5)).weights
    assert w[5] == pytest.approx(1.0) and sum(w.values()) == pytest.approx(1.0, abs=1e-14)


def test_projection_trace_and_hermiticity(rng):
    for _ in range(5):
        b = project_to_blocks(random_state(3, rng))
        assert sum(b.weights.values()) == pytest.approx(1.0, abs=1e-12)
        for blk in b.blocks:
            m = blk.chi.dense()
            assert np.abs(m - m.conj().T).max() < 1e-14


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_reconstruct_then_project_is_idempotent(n, seed):
    r = np.random.default_rng(seed)
    t = schur_transform(n)
    once = project_to_blocks(random_state(n, r), t)
    twice = project_to_blocks(once.to_full(t), t)
    for a, b in zip(once.blocks, twice.blocks):
        assert np.abs(a.chi.dense() - b.chi.dense()).max() < 1e-12
        assert np.abs(a.ladder - b.ladder).max() < 1e-12


def test_dicke_states_span_the_top_block():
    t = schur_transform(4)
    top = t.columns(4, 1)
    assert np.allclose(top, dicke_states(4), atol=1e-14)
