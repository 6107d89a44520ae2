"""Segment factor models, rank truncation and adjusted local ACVs."""

import warnings

import numpy as np
import pytest

from fvarseg.errors import ConfigurationError, DataError
from fvarseg.factor_adjust import (
    SegmentModel,
    XiAcvProvider,
    estimate_factor_number,
    fit_segment,
    fit_segments,
    local_factor_acv,
    segment_spectral,
    truncate_rank,
)
from fvarseg.spectral import WindowSpec, local_acv_set, local_spectral


def brute_local_acv(X, v, lag, G):
    p = X.shape[0]
    if lag < 0:
        return brute_local_acv(X, v, -lag, G).T
    out = np.zeros((p, p))
    for t in range(v - G + 1 + lag, v + 1):
        out += np.outer(X[:, t - lag - 1], X[:, t - 1])
    return out / G


def brute_local_spectral(X, v, G, m, omega):
    p = X.shape[0]
    out = np.zeros((p, p), dtype=complex)
    for lag in range(-m, m + 1):
        weight = max(0.0, 1.0 - abs(lag) / m)
        out += weight * brute_local_acv(X, v, lag, G) * np.exp(-1j * lag * omega)
    return out / (2.0 * np.pi)


def test_segment_spectral_whole_series_is_one_window():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2, 24))
    got = segment_spectral(X, 0, 24, 3)
    for l, omega in enumerate(2 * np.pi * np.arange(4) / 7):
        want = local_spectral(X, WindowSpec(v=24, G=24, m=3), omega)
        np.testing.assert_allclose(got[l], want, atol=1e-13) if l == 0 else None
    assert got.shape == (4, 2, 2)


def test_segment_spectral_matches_brute_force():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3, 40))
    got = segment_spectral(X, 0, 32, 3)
    np.testing.assert_allclose(
        got[0], brute_local_spectral(X, 32, 32, 3, 0.0), atol=1e-10
    )
    for l, omega in enumerate(2 * np.pi * np.arange(4) / 7):
        np.testing.assert_allclose(
            got[l], brute_local_spectral(X, 32, 32, 3, omega), atol=1e-10
        )
        np.testing.assert_allclose(
            got[l].conj(), brute_local_spectral(X, 32, 32, 3, -omega), atol=1e-10
        )


def test_segment_spectral_too_short():
    X = np.random.default_rng(1).standard_normal((2, 20))
    with pytest.raises(ConfigurationError):
        segment_spectral(X, 10, 13, 3)


def test_truncate_rank_examples():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    H = (A + A.conj().T) / 2
    np.testing.assert_allclose(truncate_rank(H, 4), H, atol=1e-9)
    np.testing.assert_array_equal(truncate_rank(H, 0), np.zeros((4, 4)))
    np.testing.assert_allclose(
        truncate_rank(np.diag([5.0, 3.0, 1.0]), 2), np.diag([5.0, 3.0, 0.0]),
        atol=1e-12,
    )
    with pytest.raises(ValueError):
        truncate_rank(H, 5)


def test_truncate_rank_preserves_top_eigenpairs():
    # spectral matrices are positive semidefinite, so the kept spectrum
    # is (mu_1..mu_q) with zeros filling the rest
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    H = A @ A.conj().T
    for q in (1, 3, 5):
        out = truncate_rank(H, q)
        want = np.sort(np.linalg.eigvalsh(H))[::-1][:q]
        got = np.sort(np.linalg.eigvalsh(out))[::-1]
        np.testing.assert_allclose(got[:q], want, atol=1e-8)
        np.testing.assert_allclose(got[q:], 0.0, atol=1e-8)


def test_estimate_factor_number_gap():
    # IC by hand: pen = z^{-1/2} log z with z = sqrt(500/7) ~ 8.452,
    # so the sharp drop after the first eigenvalue selects q = 1
    avg = np.array([100.0] + [0.01] * 19)
    assert estimate_factor_number(avg, p=20, G=500, m=7) == 1


def test_estimate_factor_number_no_gap_and_degenerate():
    flat = np.full(20, 1e-6)
    assert estimate_factor_number(flat, p=20, G=500, m=7) == 0
    with pytest.raises(DataError):
        estimate_factor_number(np.zeros(20), p=20, G=500, m=7)


def test_fit_segment_q_override_and_short_fallback():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((4, 60))
    model = fit_segment(X, 0, 60, m=3, max_lag=2, q=2)
    assert model.n_factors == 2
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        short = fit_segment(X, 0, 6, m=3, max_lag=2)
    assert short.n_factors == 0
    assert np.all(short.acv == 0)
    assert any("too short" in str(w.message) for w in caught)


def test_local_factor_acv_weighting():
    p = 2
    one = np.ones((3, p, p))
    two = 3.0 * np.ones((3, p, p))
    models = [
        SegmentModel(start=0, end=10, n_factors=1, acv=one, m=2),
        SegmentModel(start=10, end=20, n_factors=1, acv=two, m=2),
    ]
    # window inside one segment
    np.testing.assert_array_equal(local_factor_acv(models, 8, 4, 0), one[0])
    # 50/50 split -> elementwise mean
    np.testing.assert_allclose(
        local_factor_acv(models, 12, 4, 1), (one[1] + two[1]) / 2
    )
    # boundary at 10, v = 11, G = 4 covers {8,9,10,11}: weights (3,1)/4
    np.testing.assert_allclose(
        local_factor_acv(models, 11, 4, 0), (3 * one[0] + two[0]) / 4
    )
    # missing coverage is a contract error
    with pytest.raises(ValueError):
        local_factor_acv(models[:1], 20, 10, 0)


def test_xi_acv_no_factor_mode_is_raw():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((3, 30))
    provider = XiAcvProvider(X, None)
    np.testing.assert_array_equal(
        provider.acv_set(20, 10, 2), local_acv_set(X, 20, 10, 2)
    )
    np.testing.assert_array_equal(
        provider.acv(20, 10, -2), local_acv_set(X, 20, 10, 2)[2].T
    )


def test_xi_acv_full_rank_cancellation_is_kernel_weighted():
    # with q = p and one segment, the adjusted ACV at lag l equals
    # (1 - K(l/m)) times the raw ACV: exact cancellation at lag 0, and
    # the Bartlett weight l/m remains at positive lags
    rng = np.random.default_rng(7)
    p, n, m, d = 3, 40, 4, 2
    X = rng.standard_normal((p, n))
    models = fit_segments(X, [], m, d, q=p)
    provider = XiAcvProvider(X, models)
    raw = local_acv_set(X, n, n, d)
    adjusted = provider.acv_set(n, n, d)
    scale = np.abs(raw).max()
    np.testing.assert_allclose(adjusted[0], 0.0, atol=1e-8 * scale)
    for lag in range(1, d + 1):
        np.testing.assert_allclose(
            adjusted[lag], (lag / m) * raw[lag], atol=1e-8 * scale
        )


def test_xi_acv_matches_composite_oracle():
    # independently recompose: brute spectra -> eigendecomposition ->
    # rank truncation -> inverse transform -> window weighting
    rng = np.random.default_rng(4)
    p, n, m, d, q = 3, 48, 3, 2, 1
    X = rng.standard_normal((p, n))
    boundary = 24
    models = fit_segments(X, [boundary], m, d, q=q)
    provider = XiAcvProvider(X, models)

    def brute_segment_acv(start, end):
        length = end - start
        ells = np.arange(-m, m + 1)
        omegas = 2 * np.pi * ells / (2 * m + 1)
        spectra = []
        for omega in omegas:
            S = brute_local_spectral(X, end, length, m, omega)
            vals, vecs = np.linalg.eigh(S)
            order = np.argsort(vals)[::-1][:q]
            spectra.append(
                (vecs[:, order] * vals[order]) @ vecs[:, order].conj().T
            )
        acv = []
        for lag in range(d + 1):
            total = np.zeros((p, p), dtype=complex)
            for S, omega in zip(spectra, omegas):
                total += S * np.exp(1j * omega * lag)
            acv.append((2 * np.pi / (2 * m + 1)) * total.real)
        return np.asarray(acv)

    seg_acvs = [brute_segment_acv(0, boundary), brute_segment_acv(boundary, n)]
    v, G = 30, 12  # window {19..30}: 6 points in each segment
    for lag in range(d + 1):
        w0 = boundary - (v - G)
        w1 = v - boundary
        chi = (w0 * seg_acvs[0][lag] + w1 * seg_acvs[1][lag]) / G
        want = brute_local_acv(X, v, lag, G) - chi
        np.testing.assert_allclose(provider.acv(v, G, lag), want, atol=1e-9)


def test_fit_segments_parallel_matches_serial():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((4, 80))
    serial = fit_segments(X, [40], 3, 1, n_jobs=1)
    parallel = fit_segments(X, [40], 3, 1, n_jobs=2)
    for a, b in zip(serial, parallel):
        assert a.n_factors == b.n_factors
        np.testing.assert_array_equal(a.acv, b.acv)
