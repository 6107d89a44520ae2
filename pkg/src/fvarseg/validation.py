"""Input validation helpers and the panel container.

All numerical routines in this package work on a ``p x n`` matrix whose
rows are the observed series and whose columns are time points.  Time
indices in every public contract are 1-based and inclusive, so column
``t - 1`` of the array holds the observation at time ``t``.
"""

from __future__ import annotations

import numpy as np

from fvarseg.errors import DataError


class PanelSeries:
    """A validated ``p x n`` panel of real observations.

    Parameters
    ----------
    values : array-like of shape (p, n)
        Rows are series, columns are time points.  Entries must all be
        finite; ``p >= 1`` and ``n >= 2`` are required.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = check_panel(values)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:  # pragma: no cover
        return f"PanelSeries(p={self.p}, n={self.n})"


def check_panel(values) -> np.ndarray:
    """Validate and return a float64 ``p x n`` panel array."""
    X = np.asarray(values, dtype=float)
    if X.ndim != 2:
        raise DataError(f"panel must be 2-dimensional, got shape {X.shape}")
    p, n = X.shape
    if p < 1 or n < 2:
        raise DataError(f"panel needs p >= 1 and n >= 2, got p={p}, n={n}")
    if not np.isfinite(X).all():
        i, t = np.argwhere(~np.isfinite(X))[0]
        raise DataError(
            f"panel contains a non-finite entry at series {i + 1}, time {t + 1}"
        )
    return X


def as_panel_array(X) -> np.ndarray:
    """Accept a PanelSeries or array and return the validated array."""
    if isinstance(X, PanelSeries):
        return X.values
    return check_panel(X)


def check_window(n: int, v: int, G: int, m: int | None = None) -> None:
    """Validate a moving-window specification against a series of length n.

    The window is the 1-based index set ``{v - G + 1, ..., v}``; the lag
    truncation ``m``, when given, must satisfy ``1 <= m < G``.
    """
    if not 1 <= G <= n:
        raise ValueError(f"bandwidth G={G} outside [1, n={n}]")
    if not G <= v <= n:
        raise ValueError(f"window anchor v={v} outside [G={G}, n={n}]")
    if m is not None and not 1 <= m < G:
        raise ValueError(f"kernel bandwidth m={m} outside [1, G={G})")
