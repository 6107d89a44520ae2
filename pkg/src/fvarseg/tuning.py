"""Bandwidth rules, statistic scaling, threshold calibration and merging.

Thresholds for both detectors are chosen by simulation: on change-free
synthetic panels the maximum of each *scaled* detector statistic is
recorded, a high percentile per configuration cell is computed, and its
log is regressed on slowly varying functions of the design (log log n
and log G for the spectral detector; additionally log log p for the
residual detector).  The fitted linear rule is then evaluated at any
(n, p, G) to produce a threshold for the same scaled statistic.

Scaling divides detector values by statistics of the first G
observations only: per-frequency spectral contrast at the first anchor
for the factor stage, and the largest ACV deviation between the two
half-windows of the first window for the VAR stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from fvarseg.changepoints import ChangePoint
from fvarseg.errors import ConfigurationError, DataError
from fvarseg.factor_adjust import XiAcvProvider, fit_segments
from fvarseg.factor_seg import DetectorTrace, compute_trace
from fvarseg.rng import derive_key
from fvarseg.var_seg import build_yule_walker, l1_yule_walker, scan_var_changes

SCHEMA_VERSION = 1


def kernel_bandwidth(G: int) -> int:
    """Lag truncation rule ``max(1, floor(G^(1/3)))`` with exact flooring."""
    if G < 1:
        raise ValueError(f"bandwidth G={G} must be >= 1")
    k = max(1, int(round(G ** (1.0 / 3.0))))
    while (k + 1) ** 3 <= G:
        k += 1
    while k > 1 and k**3 > G:
        k -= 1
    return k


@dataclass(frozen=True)
class BandwidthPlan:
    """Window lengths for the two stages plus the per-G lag truncation."""

    factor: tuple[int, ...]
    var: tuple[int, ...]

    def __post_init__(self):
        for label, Gs in (("factor", self.factor), ("var", self.var)):
            if list(Gs) != sorted(set(Gs)):
                raise ConfigurationError(f"{label} bandwidths must be sorted unique")
            for G in Gs:
                m = kernel_bandwidth(G)
                if G < 2 * (m + 1):
                    raise ConfigurationError(
                        f"{label} bandwidth G={G} below minimum 2*(m+1)={2 * (m + 1)}"
                    )

    def m(self, G: int) -> int:
        return kernel_bandwidth(G)


def default_bandwidths(n: int, p: int) -> BandwidthPlan:
    """Default multiscale plans: quantile-spaced fractions of n for the
    factor stage and four equispaced values from ``floor(2.5 p)`` to
    ``floor(n/4)`` for the VAR stage."""
    factor = tuple(sorted({n // 10, n // 8, n // 6, n // 4}))
    lo, hi = int(2.5 * p), n // 4
    if lo > hi:
        raise ConfigurationError(
            f"VAR bandwidth plan infeasible: floor(2.5*p)={lo} exceeds floor(n/4)={hi}"
        )
    var = tuple(sorted({int(round(g)) for g in np.linspace(lo, hi, 4)}))
    return BandwidthPlan(factor=factor, var=var)


def scale_factor_trace(trace: DetectorTrace) -> DetectorTrace:
    """Divide each frequency column by its value at the first anchor v=G.

    The scaled statistic at an anchor is the across-frequency maximum of
    these ratios; a zero baseline at any frequency is degenerate data.
    """
    if int(trace.anchors[0]) != trace.bandwidth:
        raise ValueError(
            f"trace must start at anchor G={trace.bandwidth}, got {trace.anchors[0]}"
        )
    baseline = trace.values[0]
    if np.any(baseline == 0.0):
        raise DataError("zero detector baseline over the first window")
    return DetectorTrace(
        anchors=trace.anchors,
        omegas=trace.omegas,
        values=trace.values / baseline,
        bandwidth=trace.bandwidth,
    )


def var_scale_denominator(provider, G: int, d: int) -> float:
    """Largest ACV deviation between the two half-windows of the first G
    observations, over lags 0..d."""
    half = G // 2
    if half <= d:
        raise ConfigurationError(f"G={G} too small to scale with d={d} lags")
    first = provider.acv_set(half, half, d)
    last = provider.acv_set(G, half, d)
    denom = float(np.abs(first - last).max())
    if denom == 0.0:
        raise DataError("zero scaling denominator over the first window")
    return denom


def lambda_grid(gvec: np.ndarray, num: int = 10) -> np.ndarray:
    """Logarithmic grid spanning [0.01, 1] times the largest moment entry."""
    top = float(np.abs(gvec).max())
    if top <= 0:
        raise DataError("degenerate moment vector; cannot build lambda grid")
    return top * np.logspace(-2, 0, num)


def cv_lambda(provider, v0: int, G: int, d: int, grid=None) -> float:
    """Split-window cross-validation for the l1 constraint level.

    The window ending at v0 is split into two halves; for each candidate
    the coefficients are fitted on the first half's Yule-Walker system
    and scored by the residual norm on the second half's system.  The
    smallest minimiser wins.
    """
    half = G // 2
    if half <= d:
        raise ConfigurationError(f"G={G} too small for cross-validation with d={d}")
    if grid is None:
        grid = lambda_grid(build_yule_walker(provider.acv_set(v0, G, d))[1])
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("empty lambda grid")
    fit_sys = build_yule_walker(provider.acv_set(v0 - G + half, half, d))
    score_sys = build_yule_walker(provider.acv_set(v0, half, d))
    best_lam, best_score = None, np.inf
    for lam in np.sort(grid):
        est = l1_yule_walker(fit_sys[0], fit_sys[1], float(lam))
        score = float(np.abs(score_sys[0] @ est.beta - score_sys[1]).max())
        if score < best_score:
            best_lam, best_score = float(lam), score
    return best_lam


def multiscale_merge(results: dict[int, list[ChangePoint]]) -> list[ChangePoint]:
    """Bottom-up reconciliation of per-bandwidth change-point sets.

    All estimates from the finest bandwidth are kept; an estimate from a
    coarser bandwidth G is accepted only if it lies at least G/2 away
    from everything already accepted.  Within one level candidates are
    processed in ascending location order.
    """
    accepted: list[ChangePoint] = []
    for G in sorted(results):
        for cp in sorted(results[G], key=lambda c: c.location):
            if not accepted:
                accepted.append(cp)
                continue
            gap = min(abs(cp.location - a.location) for a in accepted)
            if G == min(results) or gap >= G / 2:
                accepted.append(cp)
    return sorted(accepted, key=lambda c: c.location)


@dataclass
class ThresholdModel:
    """Log-linear threshold rule fitted to null-simulation percentiles."""

    stage: str  # "factor" or "var"
    feature_names: tuple[str, ...]
    coef: np.ndarray
    tau: float
    r2_adj: float
    meta: dict = field(default_factory=dict)

    def features(self, n: int, p: int, G: int) -> np.ndarray:
        values = {
            "const": 1.0,
            "loglog_n": np.log(np.log(n)),
            "loglog_p": np.log(np.log(p)),
            "log_G": np.log(G),
        }
        return np.array([values[name] for name in self.feature_names])

    def predict(self, n: int, p: int, G: int) -> float:
        """Threshold for the scaled statistic at a given design point."""
        value = float(np.exp(self.features(n, p, G) @ self.coef))
        if not np.isfinite(value) or value <= 0:
            raise ConfigurationError(
                f"threshold model predicts non-positive value at (n={n}, p={p}, G={G})"
            )
        return value

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "stage": self.stage,
            "feature_names": list(self.feature_names),
            "coef": self.coef.tolist(),
            "tau": self.tau,
            "r2_adj": self.r2_adj,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ThresholdModel":
        return cls(
            stage=payload["stage"],
            feature_names=tuple(payload["feature_names"]),
            coef=np.asarray(payload["coef"], dtype=float),
            tau=float(payload["tau"]),
            r2_adj=float(payload["r2_adj"]),
            meta=payload.get("meta", {}),
        )


FACTOR_FEATURES = ("const", "loglog_n", "log_G")
VAR_FEATURES = ("const", "loglog_n", "loglog_p", "log_G")


def fit_threshold_regression(design: np.ndarray, response: np.ndarray):
    """Least-squares fit of log-percentiles on threshold features.

    Returns (coefficients, adjusted R^2).  A saturated or constant-
    response fit reports R^2 = 1 by convention.
    """
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    if not (np.isfinite(design).all() and np.isfinite(response).all()):
        raise ConfigurationError("non-finite entries in threshold regression")
    coef, *_ = np.linalg.lstsq(design, response, rcond=None)
    fitted = design @ coef
    ss_res = float(((response - fitted) ** 2).sum())
    ss_tot = float(((response - response.mean()) ** 2).sum())
    n_obs, n_feat = design.shape
    if ss_tot < 1e-300 or n_obs <= n_feat:
        return coef, 1.0
    r2 = 1.0 - ss_res / ss_tot
    r2_adj = 1.0 - (1.0 - r2) * (n_obs - 1) / (n_obs - n_feat)
    return coef, float(r2_adj)


@dataclass(frozen=True)
class CalibrationCell:
    """One design point of the null-simulation grid."""

    n: int
    p: int
    q: int = 2
    d: int = 1
    chi_model: str | None = "c1"
    factor_bandwidths: tuple[int, ...] | None = None
    var_bandwidths: tuple[int, ...] | None = None

    def resolved_bandwidths(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if self.factor_bandwidths is not None and self.var_bandwidths is not None:
            return tuple(self.factor_bandwidths), tuple(self.var_bandwidths)
        plan = default_bandwidths(self.n, self.p)
        factor = self.factor_bandwidths or plan.factor
        var = self.var_bandwidths or plan.var
        return tuple(factor), tuple(var)

    def key(self) -> str:
        return f"n{self.n}_p{self.p}_q{self.q}_d{self.d}_{self.chi_model or 'none'}"


def _null_replicate_stats(cell: CalibrationCell, seed: int) -> dict:
    """Max scaled detector statistics of one change-free replicate."""
    from fvarseg.dgp import DgpSpec, gen_dataset

    factor_Gs, var_Gs = cell.resolved_bandwidths()
    spec = DgpSpec(
        n=cell.n, p=cell.p, q=cell.q, d=cell.d, scenario="null",
        chi_model=cell.chi_model, chi_changes=(), xi_changes=(), seed=seed,
    )
    data = gen_dataset(spec)
    X = data.X.values
    out: dict[tuple[str, int], float] = {}
    for G in factor_Gs:
        trace = compute_trace(X, G, kernel_bandwidth(G))
        scaled = scale_factor_trace(trace)
        out[("factor", G)] = float(scaled.max_over_freq().max())
    if cell.chi_model is None:
        provider = XiAcvProvider(X, None)
    else:
        m_seg = max(cell.d, kernel_bandwidth(cell.n))
        models = fit_segments(X, [], m_seg, cell.d)
        provider = XiAcvProvider(X, models)
    for G in var_Gs:
        lam = cv_lambda(provider, G, G, cell.d)
        denom = var_scale_denominator(provider, G, cell.d)
        result = scan_var_changes(
            provider, G, cell.d, lam, threshold=np.inf, scale=denom
        )
        out[("var", G)] = float(result.trace[:, 1].max())
    return out


@dataclass
class CalibrationResult:
    factor_model: ThresholdModel
    var_model: ThresholdModel
    rows: list[dict]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "factor": self.factor_model.to_dict(),
            "var": self.var_model.to_dict(),
            "rows": self.rows,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CalibrationResult":
        return cls(
            factor_model=ThresholdModel.from_dict(payload["factor"]),
            var_model=ThresholdModel.from_dict(payload["var"]),
            rows=payload.get("rows", []),
        )


def calibrate_thresholds(
    cells,
    B: int = 50,
    tau: float = 0.05,
    seed: int = 0,
    n_jobs: int = 1,
) -> CalibrationResult:
    """Fit threshold rules from change-free simulations over a grid.

    For every cell, ``B`` null panels are generated on pre-derived
    Philox streams and the maxima of both scaled detector statistics are
    recorded per bandwidth.  The 100*(1-tau)th percentile per
    (cell, bandwidth) is regressed in logs on the stage-specific
    features; results are reproducible bit for bit for a fixed seed
    irrespective of the worker count.
    """
    cells = [c if isinstance(c, CalibrationCell) else CalibrationCell(**c) for c in cells]
    if not cells:
        raise ConfigurationError("calibration grid is empty")
    if B < 20:
        raise ConfigurationError(f"need at least 20 replicates, got B={B}")
    tasks = [
        (idx, rep, cell)
        for idx, cell in enumerate(cells)
        for rep in range(B)
    ]
    seeds = [derive_key(seed, "calibrate", cell.key(), rep) for idx, rep, cell in tasks]
    if n_jobs == 1:
        stats = [
            _null_replicate_stats(cell, s)
            for (idx, rep, cell), s in zip(tasks, seeds)
        ]
    else:
        stats = Parallel(n_jobs=n_jobs)(
            delayed(_null_replicate_stats)(cell, s)
            for (idx, rep, cell), s in zip(tasks, seeds)
        )
    per_cell: dict[tuple[int, str, int], list[float]] = {}
    for (idx, rep, cell), stat in zip(tasks, stats):
        for (stage, G), value in stat.items():
            per_cell.setdefault((idx, stage, G), []).append(value)
    rows = []
    for (idx, stage, G), values in sorted(per_cell.items()):
        cell = cells[idx]
        rows.append(
            {
                "stage": stage,
                "n": cell.n,
                "p": cell.p,
                "q": cell.q,
                "d": cell.d,
                "chi_model": cell.chi_model,
                "G": G,
                "percentile": float(np.percentile(values, 100.0 * (1.0 - tau))),
            }
        )
    models = {}
    for stage, names in (("factor", FACTOR_FEATURES), ("var", VAR_FEATURES)):
        stage_rows = [r for r in rows if r["stage"] == stage]
        probe = ThresholdModel(
            stage=stage, feature_names=names, coef=np.zeros(len(names)),
            tau=tau, r2_adj=np.nan,
        )
        design = np.array([probe.features(r["n"], r["p"], r["G"]) for r in stage_rows])
        response = np.log([r["percentile"] for r in stage_rows])
        coef, r2_adj = fit_threshold_regression(design, response)
        models[stage] = ThresholdModel(
            stage=stage,
            feature_names=names,
            coef=coef,
            tau=tau,
            r2_adj=r2_adj,
            meta={
                "B": B,
                "seed": seed,
                "grid": [c.key() for c in cells],
                "response": "log of the 100*(1-tau) percentile of max_v scaled stat",
            },
        )
    return CalibrationResult(
        factor_model=models["factor"], var_model=models["var"], rows=rows
    )
