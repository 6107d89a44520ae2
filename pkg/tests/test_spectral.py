"""Spectral-core operations against brute-force oracles."""

import numpy as np
import pytest

from fvarseg.errors import NumericalConsistencyError
from fvarseg.spectral import (
    WindowSpec,
    acv_from_spectrum,
    bartlett_weight,
    fourier_frequencies,
    hermitian_opnorm,
    hermitian_top_eigs,
    local_acv,
    local_acv_set,
    local_spectral,
    spectra_from_acvs,
    symmetrize_spectra,
)


def brute_local_acv(X, v, lag, G):
    """Term-by-term evaluation of the windowed ACV (1-based times)."""
    p = X.shape[0]
    if lag < 0:
        return brute_local_acv(X, v, -lag, G).T
    out = np.zeros((p, p))
    for t in range(v - G + 1 + lag, v + 1):
        out += np.outer(X[:, t - lag - 1], X[:, t - 1])
    return out / G


def brute_local_spectral(X, v, G, m, omega):
    """Double-loop evaluation of the lag-window spectral estimator."""
    p = X.shape[0]
    out = np.zeros((p, p), dtype=complex)
    for lag in range(-m, m + 1):
        weight = max(0.0, 1.0 - abs(lag) / m)
        out += weight * brute_local_acv(X, v, lag, G) * np.exp(-1j * lag * omega)
    return out / (2.0 * np.pi)


def test_bartlett_weight_values():
    assert bartlett_weight(0) == 1.0
    assert bartlett_weight(0.5) == 0.5
    assert bartlett_weight(1.2) == 0.0
    assert bartlett_weight(-0.25) == 0.75


def test_fourier_frequencies():
    assert fourier_frequencies(0).tolist() == [0.0]
    np.testing.assert_allclose(
        fourier_frequencies(2), [0.0, 2 * np.pi / 5, 4 * np.pi / 5], atol=1e-15
    )
    np.testing.assert_allclose(
        fourier_frequencies(1), [0.0, 2 * np.pi / 3], atol=1e-15
    )
    for m in (1, 3, 9):
        omegas = fourier_frequencies(m)
        assert np.all(np.diff(omegas) > 0)
        assert omegas[0] == 0.0 and omegas[-1] < np.pi


def test_local_acv_constant_series():
    # constant series pins the divisor: (G - lag) / G
    X = np.ones((1, 8))
    assert local_acv(X, 4, 1, 4)[0, 0] == pytest.approx(0.75, abs=1e-15)
    assert local_acv(X, 4, 0, 4)[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_local_acv_transpose_symmetry():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 8))
    for lag in range(4):
        np.testing.assert_array_equal(
            local_acv(X, 8, -lag, 5), local_acv(X, 8, lag, 5).T
        )


def test_local_acv_matches_brute_force():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((3, 20))
    for v, lag, G in [(10, 0, 6), (10, 3, 6), (20, 5, 12), (7, 2, 7)]:
        np.testing.assert_allclose(
            local_acv(X, v, lag, G), brute_local_acv(X, v, lag, G), atol=1e-13
        )


def test_local_acv_range_errors():
    X = np.ones((2, 10))
    with pytest.raises(ValueError):
        local_acv(X, 4, 0, 5)  # v < G
    with pytest.raises(ValueError):
        local_acv(X, 11, 0, 5)  # v > n
    with pytest.raises(ValueError):
        local_acv(X, 6, 5, 5)  # |lag| >= G
    with pytest.raises(ValueError):
        local_acv_set(X, 6, 5, 5)


def test_local_spectral_real_at_zero():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((3, 30))
    S = local_spectral(X, WindowSpec(v=20, G=15, m=3), 0.0)
    assert np.abs(S.imag).max() <= 1e-12


def test_local_spectral_matches_double_loop_oracle():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2, 16))
    omega = 2 * np.pi / 5
    got = local_spectral(X, WindowSpec(v=8, G=8, m=2), omega)
    want = brute_local_spectral(X, 8, 8, 2, omega)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_local_spectral_conjugate_symmetry_and_hermitian():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2, 16))
    for omega in (0.4, 1.1, 2.9):
        plus = local_spectral(X, WindowSpec(v=12, G=10, m=3), omega)
        minus = local_spectral(X, WindowSpec(v=12, G=10, m=3), -omega)
        np.testing.assert_allclose(minus, plus.conj(), atol=1e-14)
        np.testing.assert_allclose(plus, plus.conj().T, atol=1e-12)


def test_hermitian_opnorm_basics():
    assert hermitian_opnorm(np.eye(3)) == pytest.approx(1.0)
    assert hermitian_opnorm(np.diag([1.0, -4.0, 2.0])) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        hermitian_opnorm(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermitian_opnorm_vs_svd_oracle():
    # SVD gives the spectral norm through a different decomposition path
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    H = (A + A.conj().T) / 2
    want = np.linalg.svd(H, compute_uv=False)[0]
    assert hermitian_opnorm(H) == pytest.approx(want, rel=1e-9)


def test_hermitian_opnorm_random_panel_sizes():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = int(rng.integers(1, 21))
        A = rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p))
        H = (A + A.conj().T) / 2
        want = np.linalg.svd(H, compute_uv=False)[0]
        assert hermitian_opnorm(H) == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_hermitian_top_eigs_identity_and_diag():
    vals, vecs = hermitian_top_eigs(np.eye(3), 2)
    np.testing.assert_allclose(vals, [1.0, 1.0])
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(2), atol=1e-12)

    vals, vecs = hermitian_top_eigs(np.diag([5.0, 3.0, 1.0]), 1)
    assert vals[0] == pytest.approx(5.0)
    assert abs(vecs[0, 0]) == pytest.approx(1.0)


def test_hermitian_top_eigs_rank_one():
    rng = np.random.default_rng(3)
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    b *= np.sqrt(7) / np.linalg.norm(b)
    H = np.outer(b, b.conj())
    vals, vecs = hermitian_top_eigs(H, 1)
    assert vals[0] == pytest.approx(7.0, rel=1e-12)
    # eigenvector equals b up to phase
    phase = vecs[:, 0] @ b.conj()
    np.testing.assert_allclose(
        vecs[:, 0] * np.abs(phase) / phase * np.linalg.norm(b), b, atol=1e-10
    )


def test_hermitian_top_eigs_contracts():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    H = (A + A.conj().T) / 2
    vals, vecs = hermitian_top_eigs(H, 4)
    assert np.all(np.diff(vals) <= 1e-12)  # descending by signed value
    scale = hermitian_opnorm(H)
    for j in range(4):
        assert np.linalg.norm(H @ vecs[:, j] - vals[j] * vecs[:, j]) <= 1e-8 * scale
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(4), atol=1e-8)
    with pytest.raises(ValueError):
        hermitian_top_eigs(H, 7)


def test_flat_spectrum_inverts_to_identity_acv():
    m, p = 3, 1
    spectra = np.full((2 * m + 1, p, p), 1.0 / (2 * np.pi), dtype=complex)
    acv = acv_from_spectrum(spectra, m)
    assert acv[0][0, 0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(acv[1:], 0.0, atol=1e-12)


def test_acv_from_spectrum_zero_and_residue_guard():
    m = 2
    zero = np.zeros((2 * m + 1, 3, 3), dtype=complex)
    np.testing.assert_array_equal(acv_from_spectrum(zero, m), np.zeros((m + 1, 3, 3)))
    bad = zero.copy()
    bad[0, 0, 0] = 1j  # breaks conjugate symmetry -> imaginary residue
    with pytest.raises(NumericalConsistencyError):
        acv_from_spectrum(bad, m)


def roundtrip_once(rng):
    p = int(rng.integers(1, 9))
    m = int(rng.integers(1, 7))
    acvs = rng.standard_normal((m + 1, p, p))
    ells = np.arange(-m, m + 1)
    omegas = 2 * np.pi * ells / (2 * m + 1)
    spectra = spectra_from_acvs(acvs, omegas)
    got = acv_from_spectrum(spectra, m)
    for lag in range(m + 1):
        want = max(0.0, 1.0 - lag / m) * acvs[lag]
        np.testing.assert_allclose(got[lag], want, atol=1e-10)


def test_transform_round_trip_property():
    # forward transform at the 2m+1 grid frequencies, then inverse,
    # recovers the kernel-weighted lag matrices exactly
    rng = np.random.default_rng(5)
    for _ in range(50):
        roundtrip_once(rng)


def test_symmetrize_spectra_matches_negative_frequencies():
    rng = np.random.default_rng(6)
    m, p = 3, 2
    acvs = rng.standard_normal((m + 1, p, p))
    omegas = fourier_frequencies(m)
    half = spectra_from_acvs(acvs, omegas)
    full = symmetrize_spectra(half)
    ells = np.arange(-m, m + 1)
    direct = spectra_from_acvs(acvs, 2 * np.pi * ells / (2 * m + 1))
    np.testing.assert_allclose(full, direct, atol=1e-12)
