"""Windowed autocovariance and lag-window spectral density estimation.

This module is the numerical substrate of both detection stages: local
autocovariance (ACV) matrices over moving windows, their Bartlett
lag-window Fourier transform evaluated on the discrete frequency grid
``2*pi*l/(2m+1)``, the inverse transform back to lag space, and operator
norm / leading-eigenpair computations for Hermitian matrices.

All operations are pure functions of immutable inputs and are safe to
call concurrently on a shared read-only panel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fvarseg.errors import NumericalConsistencyError
from fvarseg.validation import as_panel_array, check_window

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class WindowSpec:
    """A moving window ``{v - G + 1, ..., v}`` with lag truncation ``m``."""

    v: int
    G: int
    m: int

    def validate(self, n: int) -> None:
        check_window(n, self.v, self.G, self.m)


def bartlett_weight(x: float) -> float:
    """Triangular kernel ``max(0, 1 - |x|)``."""
    return max(0.0, 1.0 - abs(x))


def fourier_frequencies(m: int) -> np.ndarray:
    """Nonnegative grid frequencies ``2*pi*l/(2m+1)`` for ``l = 0..m``."""
    if m < 0:
        raise ValueError(f"lag bandwidth m={m} must be >= 0")
    return 2.0 * np.pi * np.arange(m + 1) / (2 * m + 1)


def local_acv(X, v: int, lag: int, G: int) -> np.ndarray:
    """Windowed lag-``lag`` autocovariance over ``{v - G + 1, ..., v}``.

    For ``lag >= 0`` this is ``(1/G) * sum_t X[t - lag] X[t]^T`` with t
    running over the window entries for which both factors exist; the
    divisor is G regardless of the lag.  Negative lags return the
    transpose of the value at ``-lag``.
    """
    X = as_panel_array(X)
    check_window(X.shape[1], v, G)
    if abs(lag) >= G:
        raise ValueError(f"|lag|={abs(lag)} must be < G={G}")
    if lag < 0:
        return local_acv(X, v, -lag, G).T
    left = X[:, v - G : v - lag]
    right = X[:, v - G + lag : v]
    return (left @ right.T) / G


def local_acv_set(X, v: int, G: int, max_lag: int) -> np.ndarray:
    """Stack of windowed ACVs for lags ``0..max_lag``, shape (max_lag+1, p, p)."""
    X = as_panel_array(X)
    check_window(X.shape[1], v, G)
    if not 0 <= max_lag < G:
        raise ValueError(f"max_lag={max_lag} must be in [0, G={G})")
    p = X.shape[0]
    out = np.empty((max_lag + 1, p, p))
    window = X[:, v - G : v]
    for lag in range(max_lag + 1):
        out[lag] = (window[:, : G - lag] @ window[:, lag:].T) / G
    return out


def acv_lag_entry(acvs: np.ndarray, lag: int) -> np.ndarray:
    """Entry of a lag set at a signed lag; negative lags by transposition."""
    if lag >= 0:
        return acvs[lag]
    return acvs[-lag].T


def spectra_from_acvs(acvs: np.ndarray, omegas) -> np.ndarray:
    """Bartlett lag-window transform of an ACV stack at given frequencies.

    ``acvs`` holds lags ``0..m``; negative lags enter as transposes.  The
    result at frequency w is
    ``(2*pi)^-1 * sum_{l=-m..m} K(l/m) acv(l) exp(-i*l*w)``,
    Hermitian by construction.
    """
    acvs = np.asarray(acvs)
    m = acvs.shape[0] - 1
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    out = np.zeros((omegas.size,) + acvs.shape[1:], dtype=complex)
    out += acvs[0]
    for lag in range(1, m + 1):
        w = bartlett_weight(lag / m)
        if w == 0.0:
            continue
        phase = np.exp(-1j * lag * omegas)[:, None, None]
        out += w * (acvs[lag] * phase + acvs[lag].T * phase.conj())
    return out / (2.0 * np.pi)


def local_spectral(X, window: WindowSpec, omega: float) -> np.ndarray:
    """Local lag-window spectral density matrix estimate at one frequency."""
    X = as_panel_array(X)
    window.validate(X.shape[1])
    acvs = local_acv_set(X, window.v, window.G, window.m)
    return spectra_from_acvs(acvs, omega)[0]


def symmetrize_spectra(half: np.ndarray) -> np.ndarray:
    """Extend spectra at ``l = 0..m`` to ``l = -m..m`` by conjugation."""
    half = np.asarray(half)
    return np.concatenate([half[:0:-1].conj(), half], axis=0)


def acv_from_spectrum(spectra: np.ndarray, max_lag: int, tol: float = 1e-8) -> np.ndarray:
    """Inverse discrete transform from spectra on the frequency grid to ACVs.

    ``spectra`` has shape (2m+1, p, p) holding values at frequencies
    ``2*pi*l/(2m+1)`` for ``l = -m..m`` (index 0 is ``l = -m``).  Returns
    real matrices ``(2*pi/(2m+1)) * sum_l S_l exp(i*w_l*lag)`` for lags
    ``0..max_lag``.  The imaginary residue must stay below ``tol``; it is
    checked and then discarded.
    """
    spectra = np.asarray(spectra, dtype=complex)
    two_m1 = spectra.shape[0]
    if two_m1 % 2 != 1:
        raise ValueError("spectra stack must cover l = -m..m (odd length)")
    m = (two_m1 - 1) // 2
    if max_lag > m:
        raise ValueError(f"max_lag={max_lag} exceeds kernel bandwidth m={m}")
    ells = np.arange(-m, m + 1)
    omegas = 2.0 * np.pi * ells / two_m1
    out = np.empty((max_lag + 1,) + spectra.shape[1:])
    for lag in range(max_lag + 1):
        phases = np.exp(1j * omegas * lag)
        acc = np.tensordot(phases, spectra, axes=(0, 0)) * (2.0 * np.pi / two_m1)
        residue = np.abs(acc.imag).max()
        if residue > tol:
            raise NumericalConsistencyError(
                f"imaginary residue {residue:.3e} above {tol:.1e} at lag {lag}"
            )
        out[lag] = acc.real
    return out


def _check_hermitian(H: np.ndarray, tol: float) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    dev = np.abs(H - H.conj().T).max()
    scale = max(1.0, np.abs(H).max())
    if dev > tol * scale:
        raise ValueError(f"matrix deviates from Hermitian by {dev:.3e}")
    return H


def hermitian_opnorm(H, tol: float = HERMITIAN_TOL) -> float:
    """Spectral norm (largest absolute eigenvalue) of a Hermitian matrix."""
    H = _check_hermitian(H, tol)
    return float(np.abs(np.linalg.eigvalsh(H)).max())


def hermitian_top_eigs(H, q: int, tol: float = HERMITIAN_TOL):
    """Leading ``q`` eigenpairs of a Hermitian matrix.

    Eigenvalues are sorted descending by signed value; eigenvectors are
    orthonormal columns.  Ties may return any orthonormal basis of the
    tied subspace.
    """
    H = _check_hermitian(H, tol)
    p = H.shape[0]
    if not 1 <= q <= p:
        raise ValueError(f"q={q} outside [1, p={p}]")
    vals, vecs = np.linalg.eigh(H)
    order = np.argsort(vals)[::-1][:q]
    return vals[order], vecs[:, order]
