"""Segment-wise factor models and factor-adjusted local autocovariances.

After the factor-component scan has fixed a segmentation, each segment
gets a spectral density estimate whose leading eigenpairs capture the
factor-driven part.  Rank truncation followed by the inverse transform
on the discrete frequency grid yields the segment ACV of the pervasive
component; subtracting its window-weighted average from the raw local
ACV gives the local ACV of the remaining (VAR) component, which is all
the second detection stage needs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from fvarseg.errors import ConfigurationError, DataError
from fvarseg.spectral import (
    acv_from_spectrum,
    fourier_frequencies,
    hermitian_top_eigs,
    local_acv_set,
    spectra_from_acvs,
    symmetrize_spectra,
)
from fvarseg.validation import as_panel_array


@dataclass
class SegmentModel:
    """Per-segment factor structure over the half-open span (start, end].

    ``acv[l]`` holds the estimated factor-component autocovariance at lag
    ``l`` (0..d); negative lags are transposes.  ``eig_profile[l]`` holds
    the spectral eigenvalues (descending) at frequency index l = 0..m.
    """

    start: int
    end: int
    n_factors: int
    acv: np.ndarray
    m: int
    eig_profile: np.ndarray = field(repr=False, default=None)

    @property
    def length(self) -> int:
        return self.end - self.start

    def to_record(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "q": self.n_factors,
            "m": self.m,
            "eig_profile": None
            if self.eig_profile is None
            else self.eig_profile.tolist(),
        }

    def acv_to_csv(self, path) -> None:
        """Dump the factor-component ACV matrices as (lag, i, j, value) rows."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lag", "i", "j", "value"])
            for lag in range(self.acv.shape[0]):
                for i in range(self.acv.shape[1]):
                    for j in range(self.acv.shape[2]):
                        writer.writerow([lag, i + 1, j + 1, f"{self.acv[lag, i, j]:.17g}"])


def segment_spectral(X, start: int, end: int, m: int) -> np.ndarray:
    """Spectra of one segment at frequency indices 0..m, shape (m+1, p, p).

    The whole segment (start, end] is used as a single window, so this is
    the moving-window estimator with anchor ``end`` and bandwidth
    ``end - start``.  Frequencies at negative indices follow by
    conjugation.
    """
    X = as_panel_array(X)
    length = end - start
    if length <= m:
        raise ConfigurationError(
            f"segment ({start}, {end}] shorter than m+1={m + 1} observations"
        )
    acvs = local_acv_set(X, end, length, m)
    return spectra_from_acvs(acvs, fourier_frequencies(m))


def truncate_rank(S: np.ndarray, q: int) -> np.ndarray:
    """Keep only the q largest-eigenvalue components of a Hermitian matrix."""
    S = np.asarray(S)
    p = S.shape[0]
    if q > p:
        raise ValueError(f"q={q} exceeds dimension p={p}")
    if q == 0:
        return np.zeros_like(S, dtype=complex)
    vals, vecs = hermitian_top_eigs(S, q)
    return (vecs * vals) @ vecs.conj().T


def estimate_factor_number(
    eigenvalues,
    p: int,
    G: int,
    m: int,
    q_max: int | None = None,
    penalty_scale: float = 1.0,
) -> int:
    """Information-criterion estimate of the factor count from eigenvalues.

    ``eigenvalues`` is either the frequency-averaged spectrum (p,) or a
    (n_freq, p) profile that is averaged here.  The criterion is
    ``log(mean of the p - q smallest averaged eigenvalues)`` plus
    ``q * penalty_scale * pen`` with
    ``pen = z^{-1/2} * log(z)``, ``z = min(p, sqrt(G/m))``, minimised
    over ``0 <= q <= q_max``.
    """
    avg = np.asarray(eigenvalues, dtype=float)
    if avg.ndim == 2:
        avg = avg.mean(axis=0)
    if avg.size != p:
        raise ValueError(f"expected {p} eigenvalues, got {avg.size}")
    if q_max is None:
        q_max = min(20, p // 2)
    if q_max > p:
        raise ValueError(f"q_max={q_max} exceeds p={p}")
    if np.all(avg <= 0):
        raise DataError("all averaged eigenvalues are nonpositive")
    z = min(float(p), np.sqrt(G / m))
    pen = penalty_scale * np.log(z) / np.sqrt(z)
    avg_desc = np.sort(avg)[::-1]
    best_q, best_ic = 0, np.inf
    for q in range(q_max + 1):
        tail = avg_desc[q:].sum() / p
        ic = (np.log(tail) if tail > 0 else np.inf) + q * pen
        if ic < best_ic:
            best_q, best_ic = q, ic
    return best_q


def fit_segment(
    X,
    start: int,
    end: int,
    m: int,
    max_lag: int,
    q: int | None = None,
    q_max: int | None = None,
    penalty_scale: float = 1.0,
) -> SegmentModel:
    """Estimate one segment's factor count and factor-component ACVs.

    Segments too short for spectral estimation (< 2*(m+1) observations)
    fall back to a pure idiosyncratic model (q=0) with a warning.
    """
    X = as_panel_array(X)
    p = X.shape[0]
    length = end - start
    if length < 2 * (m + 1):
        warnings.warn(
            f"segment ({start}, {end}] too short for factor estimation; using q=0",
            stacklevel=2,
        )
        return SegmentModel(
            start=start,
            end=end,
            n_factors=0,
            acv=np.zeros((max_lag + 1, p, p)),
            m=m,
            eig_profile=np.zeros((m + 1, p)),
        )
    spectra = segment_spectral(X, start, end, m)
    profile = np.empty((m + 1, p))
    for l in range(m + 1):
        profile[l] = np.sort(np.linalg.eigvalsh(spectra[l]))[::-1]
    if q is None:
        q = estimate_factor_number(profile, p, length, m, q_max, penalty_scale)
    truncated = np.stack([truncate_rank(S, q) for S in spectra])
    acv = acv_from_spectrum(symmetrize_spectra(truncated), max_lag)
    return SegmentModel(
        start=start, end=end, n_factors=q, acv=acv, m=m, eig_profile=profile
    )


def fit_segments(
    X,
    boundaries,
    m_rule,
    max_lag: int,
    q=None,
    q_max: int | None = None,
    penalty_scale: float = 1.0,
    n_jobs: int = 1,
) -> list[SegmentModel]:
    """Fit factor models on all segments defined by sorted boundaries.

    ``boundaries`` are the interior change locations; segment k spans
    ``(b_k, b_{k+1}]`` with ``b_0 = 0`` and ``b_{K+1} = n``.  ``m_rule``
    is either an integer used for every segment or a callable mapping
    segment length to a kernel bandwidth.  ``q`` may be None (estimate),
    an integer applied to all segments, or one value per segment.
    """
    X = as_panel_array(X)
    n = X.shape[1]
    edges = [0, *sorted(int(b) for b in boundaries), n]
    if len(set(edges)) != len(edges):
        raise ConfigurationError(f"duplicate segment boundaries in {edges}")
    n_seg = len(edges) - 1
    if q is None or np.isscalar(q):
        q_list = [q] * n_seg
    else:
        q_list = list(q)
        if len(q_list) != n_seg:
            raise ConfigurationError(
                f"{len(q_list)} factor-count overrides for {n_seg} segments"
            )
    jobs = []
    for k in range(n_seg):
        start, end = edges[k], edges[k + 1]
        m = m_rule(end - start) if callable(m_rule) else int(m_rule)
        jobs.append((start, end, m, q_list[k]))
    if n_jobs == 1 or len(jobs) == 1:
        return [
            fit_segment(X, s, e, m, max_lag, qk, q_max, penalty_scale)
            for s, e, m, qk in jobs
        ]
    return Parallel(n_jobs=n_jobs)(
        delayed(fit_segment)(X, s, e, m, max_lag, qk, q_max, penalty_scale)
        for s, e, m, qk in jobs
    )


def local_factor_acv(models: list[SegmentModel], v: int, G: int, lag: int) -> np.ndarray:
    """Window-weighted average of segment factor ACVs at one lag.

    Each segment intersecting the window ``{v - G + 1, ..., v}``
    contributes its ACV weighted by the number of covered time points;
    the integer weights sum to G.
    """
    total = 0
    out = None
    for model in models:
        weight = min(model.end, v) - max(model.start, v - G)
        if weight <= 0:
            continue
        entry = model.acv[lag] if lag >= 0 else model.acv[-lag].T
        out = weight * entry if out is None else out + weight * entry
        total += weight
    if out is None or total != G:
        raise ValueError(
            f"segment models cover {total} of {G} window points at v={v}"
        )
    return out / G


class XiAcvProvider:
    """Local ACVs of the VAR component given fitted segment models.

    With segment models present the provider returns the raw local ACV
    minus the weighted factor-component ACV; without them (no-factor
    mode) the raw local ACV is returned unchanged.
    """

    def __init__(self, X, models: list[SegmentModel] | None = None):
        self.X = as_panel_array(X)
        self.models = models

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return self.X.shape[0]

    def acv_set(self, v: int, G: int, max_lag: int) -> np.ndarray:
        """Stack of local VAR-component ACVs at lags 0..max_lag."""
        raw = local_acv_set(self.X, v, G, max_lag)
        if self.models is None:
            return raw
        for lag in range(max_lag + 1):
            raw[lag] -= local_factor_acv(self.models, v, G, lag)
        return raw

    def acv(self, v: int, G: int, lag: int) -> np.ndarray:
        """Single local VAR-component ACV at a signed lag."""
        if lag < 0:
            return self.acv(v, G, -lag).T
        return self.acv_set(v, G, lag)[lag]
