import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentflow.errors import HintRejected, RankAmbiguity, RootFindingFailure
from momentflow.spectral import (
    aberth_roots,
    char_poly,
    decompose,
    eigenvalues,
    jordan_chains,
    nullity_profile,
)
from oracles import jordan_matrix


def test_char_poly_companion():
    # companion of z^3 - 2z^2 + 3z - 5
    A = np.array([[2, -3, 5], [1, 0, 0], [0, 1, 0]], dtype=complex)
    # coefficients are stored constant term first
    assert np.allclose(char_poly(A), [-5, 3, -2, 1])


def test_aberth_simple_roots():
    roots = aberth_roots(np.array([1, 0, 0, -1], dtype=complex))
    want = np.exp(2j * np.pi * np.arange(3) / 3)
    assert np.allclose(sorted(roots, key=np.angle), sorted(want, key=np.angle), atol=1e-14)


def test_aberth_sweep_cap():
    with pytest.raises(RootFindingFailure):
        aberth_roots(np.array([1, 0, 0, 0, 0, -1e-30], dtype=complex), max_sweeps=1)


def test_eigenvalues_basic():
    ev = eigenvalues(np.diag([1.0, 2.0]))
    assert [k for _, k in ev] == [1, 1]
    assert np.allclose([v for v, _ in ev], [1, 2], atol=1e-14)
    assert eigenvalues([[0, 1], [0, 0]]) == [(0, 2)]
    assert eigenvalues(np.zeros((3, 3))) == [(0, 3)]
    roots = eigenvalues([[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    assert sorted(k for _, k in roots) == [1, 1, 1]


def test_nullity_profile_of_nilpotent():
    N = np.eye(3, k=1)
    dims, bases = nullity_profile(N, 0)
    assert dims == [0, 1, 2, 3]
    assert bases[-1].shape == (3, 3)


def test_jordan_chain_of_shift():
    chains = jordan_chains(np.eye(2, k=1), 0)
    assert len(chains) == 1 and chains[0].length == 2
    u1, u2 = chains[0].vectors
    assert np.allclose(u1, [1, 0]) and np.allclose(u2, [0, 1])


def test_chain_relations():
    S = np.array([[1, 0.5, 0.2, 0], [0.1, 1, -0.3, 0.2], [0.4, -0.2, 1, 0.1], [0, 0.3, 0.1, 1]], dtype=complex)
    A = jordan_matrix([(1 + 1j, 3), (-2, 1)], S)
    dec = decompose(A)
    assert dec.chain_lengths(dec.spectrum[0]) == [3]
    assert max(dec.chain_residuals()) < 1e-10
    assert dec.reconstruction_error() < 1e-10


def test_identity_multiple():
    dec = decompose(np.diag([3.0, 3.0]))
    assert dec.eigen[0].algebraic == 2 and dec.eigen[0].geometric == 2
    assert dec.chain_lengths() == [1, 1]


def test_hints():
    A = np.diag([1.0, 2.0, 2.0])
    dec = decompose(A, hints=[2.0])
    assert sorted(e.algebraic for e in dec.eigen) == [1, 2]
    assert "supplemented" in dec.notes[0]
    with pytest.raises(HintRejected):
        decompose(A, hints=[5.0])


@pytest.mark.parametrize("gap, want", [(1e-6, [(2, 1)]), (5e-5, None), (1e-3, [(1, 1), (1, 1)])])
def test_near_defective_pairs(gap, want):
    # a split of d leaves a singular value near d^2 / 4; close to the rank
    # threshold the decision is refused rather than guessed
    A = np.array([[1.0, 1.0], [0.0, 1.0 + gap]])
    if want is None:
        with pytest.raises(RankAmbiguity):
            decompose(A)
    else:
        assert [(e.algebraic, e.geometric) for e in decompose(A).eigen] == want


def test_dimension_cap():
    with pytest.raises(ValueError):
        decompose(np.eye(9))


def _partition(draw, n):
    sizes, rem = [], n
    while rem:
        k = draw(st.integers(1, rem))
        sizes.append(k)
        rem -= k
    return sizes


@st.composite
def jordan_problems(draw):
    n = draw(st.integers(1, 6))
    sizes = _partition(draw, n)
    pool = [2.0, -1 + 1j, -1.5j, 1 + 1.5j, -2.5, 0.0]
    lams = [pool[draw(st.integers(0, len(pool) - 1))] for _ in sizes]
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    while True:
        S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        if np.linalg.cond(S) <= 100:
            break
    return list(zip(lams, sizes)), S


@given(jordan_problems())
def test_block_sizes_recovered(problem):
    blocks, S = problem
    A = jordan_matrix(blocks, S)
    dec = decompose(A)
    want: dict = {}
    for lam, k in blocks:
        want.setdefault(lam, []).append(k)
    got = sorted(sorted(dec.chain_lengths(e.value)) for e in dec.eigen)
    assert got == sorted(sorted(v) for v in want.values())
    assert max(dec.chain_residuals()) <= 1e-8
    for e in dec.eigen:
        assert min(abs(e.value - lam) for lam in want) < 1e-6


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False), min_size=1, max_size=6))
def test_diagonal_spectrum(vals):
    vals = np.array(vals)
    # keep the values well separated or exactly equal
    rounded = np.round(vals * 2) / 2
    dec = decompose(np.diag(rounded))
    assert sum(e.algebraic for e in dec.eigen) == len(rounded)
    for e in dec.eigen:
        assert e.algebraic == e.geometric
        assert e.algebraic == int(np.sum(np.abs(rounded - e.value) < 1e-9))


def test_no_warnings_on_plain_input():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        decompose(np.diag([1.0, -1.0]))
