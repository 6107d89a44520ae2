"""Segmentation scoring: Hausdorff distance, count buckets, harness."""

import numpy as np
import pytest

from fvarseg.metrics import hausdorff, k_distribution


def brute_hausdorff(est, truth, n):
    if not est and not truth:
        return 0.0
    if not est or not truth:
        return 1.0
    a = max(min(abs(e - t) for t in truth) for e in est)
    b = max(min(abs(e - t) for e in est) for t in truth)
    return max(a, b) / n


def test_hausdorff_examples():
    assert hausdorff([100, 500], [100, 500], 1000) == 0.0
    assert hausdorff([100], [120], 1000) == pytest.approx(0.02)
    # one-sided mismatch dominates: nearest-truth distances are (20, 780)
    assert hausdorff([100, 900], [120], 1000) == pytest.approx(0.78)


def test_hausdorff_empty_conventions():
    assert hausdorff([], [], 500) == 0.0
    assert hausdorff([10], [], 500) == 1.0
    assert hausdorff([], [10], 500) == 1.0


def test_hausdorff_matches_brute_force_and_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = 1000
        a = sorted(rng.choice(np.arange(1, n + 1), size=rng.integers(1, 6), replace=False).tolist())
        b = sorted(rng.choice(np.arange(1, n + 1), size=rng.integers(1, 6), replace=False).tolist())
        got = hausdorff(a, b, n)
        assert got == pytest.approx(brute_hausdorff(a, b, n))
        assert got == pytest.approx(hausdorff(b, a, n))
        assert hausdorff(a, a, n) == 0.0
        assert 0.0 <= got <= 1.0


def test_k_distribution_buckets():
    assert k_distribution([0, 0, 0]) == {"<=-2": 0, "-1": 0, "0": 3, "1": 0, ">=2": 0}
    assert k_distribution([-3, -1, 0, 0, 2]) == {
        "<=-2": 1, "-1": 1, "0": 2, "1": 0, ">=2": 1,
    }
    empty = k_distribution([])
    assert sum(empty.values()) == 0
