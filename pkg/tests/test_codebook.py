import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import crandn
from diffbeam.codebook import (
    Codebook,
    build_transition_table,
    check_property1,
    cyclic_codebook,
    generate_glp_codebook,
    glp_search,
    load_codebook,
    min_distance,
    orthonormal_codebook,
    read_matrix_blocks,
    save_codebook,
    write_matrix_blocks,
)
from diffbeam.errors import DomainError, LoadError

REFERENCE_ENV = "DIFFBEAM_REFERENCE_CODEBOOK"


def random_codebook(seed, mt, n):
    v = crandn(np.random.default_rng(seed), n, mt)
    return Codebook(v / np.linalg.norm(v, axis=1, keepdims=True))


def mub_codebook():
    """Three mutually unbiased bases of C^2: six lines, all cross overlaps 1/2 or 0."""
    s = 1 / math.sqrt(2)
    return np.array([[1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]], dtype=complex)


def test_orthonormal_codebook_distance():
    assert orthonormal_codebook(4).min_distance == pytest.approx(1.0)


@given(mt=st.integers(2, 4), n=st.integers(2, 20), seed=st.integers(0, 2**32 - 1))
def test_distance_respects_rankin_bound(mt, n, seed):
    cb = random_codebook(seed, mt, n)
    welch = max((n - mt) / (mt * (n - 1)), 0.0)
    assert cb.min_distance <= math.sqrt(1 - welch) + 1e-12


def test_codebook_validation():
    with pytest.raises(DomainError):
        Codebook(np.array([[1, 0], [0, 2]], dtype=complex))
    with pytest.raises(DomainError):
        Codebook(np.array([[1, 0], [1j, 0]], dtype=complex))
    with pytest.raises(DomainError):
        Codebook(np.array([[1, 0]], dtype=complex))
    with pytest.raises(DomainError):
        Codebook(np.eye(2), min_distance=0.5)


def test_glp_small_cases_reach_known_optima():
    assert generate_glp_codebook(2, 2, seed=0, restarts=1, iterations=300).min_distance > 0.9999
    # Welch-tight optima: three lines in C^2 at sqrt(3)/2, four (SIC) at sqrt(2/3)
    for n, best in ((3, math.sqrt(3) / 2), (4, math.sqrt(2 / 3))):
        j = generate_glp_codebook(2, n, seed=0, restarts=2, iterations=1500).min_distance
        assert 0.99 * best <= j <= best + 1e-12


def test_glp_is_seed_deterministic_and_history_monotone():
    v1, h1 = glp_search(3, 9, seed=4, restarts=2, iterations=200)
    v2, h2 = glp_search(3, 9, seed=4, restarts=2, iterations=200)
    assert np.array_equal(v1, v2) and h1 == h2
    assert all(b >= a for a, b in zip(h1, h1[1:]))
    assert h1[-1] == pytest.approx(min_distance(v1))


def test_cyclic_codebook_has_equal_distance_spectra(cb64, tt64):
    assert cb64.min_distance > 0.6
    assert check_property1(tt64) < 1e-12


def test_transition_table_structure(tt64):
    n = tt64.N
    rows = np.arange(n)
    assert np.array_equal(tt64.order[:, 0], rows)
    assert np.allclose(tt64.betas[:, 0], 1.0)
    assert np.all(np.diff(tt64.betas, axis=1) <= 1e-12)
    assert np.array_equal(tt64.order[rows[:, None], tt64.xi], np.broadcast_to(rows, (n, n)))
    assert tt64.target(5, tt64.symbol(5, 17)) == 17


def test_transition_ties_keep_ascending_index():
    tt = build_transition_table(orthonormal_codebook(4))
    assert tt.order[2].tolist() == [2, 0, 1, 3]


def test_property1_detects_perturbation():
    base = mub_codebook()
    assert check_property1(build_transition_table(Codebook(base))) < 1e-12
    bent = base.copy()
    bent[2] = bent[2] + 0.1 * np.array([1, -1j])
    bent[2] /= np.linalg.norm(bent[2])
    assert check_property1(build_transition_table(Codebook(bent))) > 0.02


def test_codebook_file_round_trip(tmp_path, cb8):
    path = tmp_path / "cb.txt"
    save_codebook(cb8, path)
    back = load_codebook(path)
    assert np.array_equal(back.vectors, cb8.vectors)
    assert back.min_distance == cb8.min_distance


def test_loader_renormalizes_small_errors(tmp_path):
    path = tmp_path / "cb.txt"
    path.write_text("2 2\n1.0000001 0 0 0\n0 0 1 0\n")
    cb = load_codebook(path)
    assert np.allclose(np.linalg.norm(cb.vectors, axis=1), 1.0, atol=1e-15)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("2 2\n1 0 0 0\n0 0 1.1 0\n", ":3: codeword 1 has norm"),
        ("2 3\n1 0 0 0\n0 0 1 0\n", "expected 3 rows"),
        ("2 2\n1 0 0 0\n0 0 1\n", ":3: expected 4 reals"),
        ("2 2\n1 0 0 0\n# dup\n0 1 0 0\n", ":4: codeword 1 duplicates codeword 0 (line 2)"),
        ("2 2\n1 0 0 0\n0 0 1 0\n0 0 1 0\n", ":4: trailing data"),
        ("2 x\n", ":1: cannot parse"),
        ("2.5 2\n", ":1: header"),
    ],
)
def test_loader_diagnostics(tmp_path, text, fragment):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(LoadError) as info:
        load_codebook(path)
    assert fragment in str(info.value)


def test_loader_missing_file(tmp_path):
    with pytest.raises(LoadError):
        load_codebook(tmp_path / "nope.txt")


def test_matrix_blocks_round_trip(tmp_path):
    r_t, r_r = np.eye(4) * (1 + 0.5j), np.ones((2, 3))
    path = tmp_path / "m.txt"
    write_matrix_blocks(path, r_t, r_r)
    a, b = read_matrix_blocks(path)
    assert np.array_equal(a, r_t) and np.array_equal(b, r_r)


def test_reference_codebook_example():
    path = os.environ.get(REFERENCE_ENV)
    if not path:
        pytest.skip(f"set {REFERENCE_ENV} to the 4-antenna 64-entry reference codebook file")
    tt = build_transition_table(load_codebook(path))
    # from the 2nd codeword, the 21st is the 4th-closest (1-based counting)
    assert tt.symbol(1, 20) == 3
