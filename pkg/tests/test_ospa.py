"""Metric properties and assignment optimality of the set distance."""

import itertools

import numpy as np
import pytest

from pairtrack.ospa import OspaParams, ospa_distance


def brute_force(x, y, c, p):
    m, n = len(x), len(y)
    if m > n:
        x, y, m, n = y, x, n, m
    if m == 0 and n == 0:
        return 0.0
    if m == 0:
        return c
    best = np.inf
    for perm in itertools.permutations(range(n), m):
        s = sum(
            min(c, float(np.linalg.norm(x[i] - y[j]))) ** p
            for i, j in enumerate(perm)
        )
        best = min(best, s)
    return ((best + c**p * (n - m)) / n) ** (1.0 / p)


def test_params_validation():
    with pytest.raises(ValueError, match="cutoff"):
        OspaParams(cutoff=0.0)
    with pytest.raises(ValueError, match="order"):
        OspaParams(order=0.5)


def test_both_empty_is_zero():
    assert ospa_distance([], [], OspaParams(cutoff=100.0)) == 0.0


def test_one_empty_is_pure_cardinality_penalty():
    params = OspaParams(cutoff=100.0, order=1.0)
    assert ospa_distance([], [[1.0, 2.0]], params) == pytest.approx(100.0)
    assert ospa_distance([[1.0, 2.0], [3.0, 4.0]], [], params) == pytest.approx(100.0)


def test_identity():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 2)) * 50
    assert ospa_distance(x, x.copy()) == pytest.approx(0.0, abs=1e-12)


def test_symmetry_and_bound():
    rng = np.random.default_rng(1)
    params = OspaParams(cutoff=100.0, order=1.0)
    for _ in range(50):
        x = rng.uniform(-500, 500, size=(rng.integers(0, 5), 2))
        y = rng.uniform(-500, 500, size=(rng.integers(0, 5), 2))
        d_xy = ospa_distance(x, y, params)
        d_yx = ospa_distance(y, x, params)
        assert d_xy == d_yx
        assert 0.0 <= d_xy <= 100.0


def test_cardinality_term_by_hand():
    # one perfect match plus one unmatched point: ((0 + c) / 2) at p = 1
    params = OspaParams(cutoff=100.0, order=1.0)
    x = [[0.0, 0.0]]
    y = [[0.0, 0.0], [1e6, 1e6]]
    assert ospa_distance(x, y, params) == pytest.approx(50.0)


def test_localization_saturates_at_cutoff():
    params = OspaParams(cutoff=10.0, order=1.0)
    d = ospa_distance([[0.0, 0.0]], [[1e5, 0.0]], params)
    assert d == pytest.approx(10.0)


def test_order_two_known_case():
    # distances 3 and 4 with cutoff above both: sqrt((9+16)/2)
    params = OspaParams(cutoff=100.0, order=2.0)
    x = [[0.0, 0.0], [10.0, 0.0]]
    y = [[3.0, 0.0], [10.0, 4.0]]
    assert ospa_distance(x, y, params) == pytest.approx(np.sqrt(12.5))


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError, match="dimensions"):
        ospa_distance([[1.0, 2.0]], [[1.0, 2.0, 3.0]])


def test_assignment_matches_brute_force():
    rng = np.random.default_rng(2)
    params = OspaParams(cutoff=100.0, order=1.0)
    for _ in range(300):
        m = int(rng.integers(0, 7))
        n = int(rng.integers(0, 7))
        x = rng.uniform(-200, 200, size=(m, 2))
        y = rng.uniform(-200, 200, size=(n, 2))
        got = ospa_distance(x, y, params)
        want = brute_force(x, y, 100.0, 1.0)
        assert got == pytest.approx(want, abs=1e-10)
