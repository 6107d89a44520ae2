"""Scikit-learn style segmentation estimators.

``FactorVarSegmenter.fit`` runs the full two-stage pipeline on a panel
given as an ``(n_samples, n_series)`` array: a multiscale scan of the
spectral-contrast detector locates changes in the factor-driven
component, per-segment factor models are fitted and subtracted from the
local autocovariances, and a multiscale sequential scan of the
Yule-Walker residual detector locates changes in the VAR component.
With ``factor="none"`` the first stage is skipped and the raw panel is
treated as the VAR process itself.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from fvarseg.changepoints import ChangePoint
from fvarseg.errors import ConfigurationError
from fvarseg.factor_adjust import XiAcvProvider, fit_segments
from fvarseg.factor_seg import compute_trace, scan_changes
from fvarseg.tuning import (
    BandwidthPlan,
    CalibrationResult,
    ThresholdModel,
    cv_lambda,
    default_bandwidths,
    kernel_bandwidth,
    multiscale_merge,
    scale_factor_trace,
    var_scale_denominator,
)
from fvarseg.validation import check_panel
from fvarseg.var_seg import scan_var_changes

DEFAULT_STANDALONE_PI = 1.0


def _as_bandwidths(value) -> tuple[int, ...]:
    return tuple(sorted({int(g) for g in value}))


class FactorVarSegmenter(BaseEstimator):
    """Two-stage change-point estimator for high-dimensional panels.

    Parameters
    ----------
    var_order : int
        Lag order d of the VAR component.
    factor : {"auto", "none"}
        "none" skips the factor stage entirely (the observed panel is
        the VAR process); "auto" runs both stages.
    bandwidths : "auto" or (sequence, sequence)
        Window lengths per stage; "auto" uses the default multiscale
        plans.
    thresholds : "default", dict, CalibrationResult or pair of models
        "default" loads the packaged calibration file (factor mode) or
        uses the flat scaled threshold 1.0 for the VAR stage in
        standalone mode.  A dict may fix scalar values per stage, e.g.
        ``{"kappa": 1.6, "pi": 1.2}``; thresholds always apply to the
        scaled statistics.
    lam : "cv" or float
        Constraint level of the l1 Yule-Walker estimator; "cv" selects
        it by split-window cross-validation per bandwidth.
    q : None, int or sequence
        Factor count override (None estimates per segment by the
        information criterion).
    eta_factor, eta_var : float
        Local-maximiser radius fraction (factor stage) and trim
        fraction between detections (VAR stage).
    refine : bool
        Use the frequency-averaged location estimate in the factor
        scan.
    demean : bool
        Remove per-series means before analysis.
    n_jobs : int
        Worker count for independent units (bandwidths, LP columns);
        results do not depend on it.
    """

    def __init__(
        self,
        var_order: int = 1,
        factor: str = "auto",
        bandwidths="auto",
        thresholds="default",
        lam="cv",
        q=None,
        q_max: int | None = None,
        ic_penalty_scale: float = 1.0,
        eta_factor: float = 0.5,
        eta_var: float = 0.0,
        refine: bool = True,
        demean: bool = True,
        n_jobs: int = 1,
    ):
        self.var_order = var_order
        self.factor = factor
        self.bandwidths = bandwidths
        self.thresholds = thresholds
        self.lam = lam
        self.q = q
        self.q_max = q_max
        self.ic_penalty_scale = ic_penalty_scale
        self.eta_factor = eta_factor
        self.eta_var = eta_var
        self.refine = refine
        self.demean = demean
        self.n_jobs = n_jobs

    # -- configuration resolution -------------------------------------

    def _resolve_plan(self, n: int, p: int) -> BandwidthPlan:
        if isinstance(self.bandwidths, str):
            if self.bandwidths != "auto":
                raise ConfigurationError(
                    f"unknown bandwidths setting {self.bandwidths!r}"
                )
            return default_bandwidths(n, p)
        factor_Gs, var_Gs = self.bandwidths
        return BandwidthPlan(
            factor=_as_bandwidths(factor_Gs), var=_as_bandwidths(var_Gs)
        )

    def _resolve_thresholds(self):
        """Return (kappa_fn, pi_fn) mapping (n, p, G) to scaled thresholds."""
        spec = self.thresholds
        if isinstance(spec, str) and spec == "default":
            if self.factor == "none":
                return None, lambda n, p, G: DEFAULT_STANDALONE_PI
            from fvarseg.serialize import load_default_calibration

            calib = load_default_calibration()
            return calib.factor_model.predict, calib.var_model.predict
        if isinstance(spec, CalibrationResult):
            return spec.factor_model.predict, spec.var_model.predict
        if isinstance(spec, (tuple, list)) and all(
            isinstance(mdl, ThresholdModel) for mdl in spec
        ):
            factor_mdl = next(m for m in spec if m.stage == "factor")
            var_mdl = next(m for m in spec if m.stage == "var")
            return factor_mdl.predict, var_mdl.predict
        if isinstance(spec, dict):
            kappa = spec.get("kappa")
            pi = spec.get("pi")
            kappa_fn = None
            if kappa is not None:
                kappa_fn = (
                    kappa.predict
                    if isinstance(kappa, ThresholdModel)
                    else (lambda n, p, G, _k=float(kappa): _k)
                )
            if pi is None:
                pi_fn = lambda n, p, G: DEFAULT_STANDALONE_PI
            elif isinstance(pi, ThresholdModel):
                pi_fn = pi.predict
            else:
                pi_fn = lambda n, p, G, _v=float(pi): _v
            if self.factor != "none" and kappa_fn is None:
                raise ConfigurationError(
                    "factor-stage threshold 'kappa' missing from thresholds dict"
                )
            return kappa_fn, pi_fn
        raise ConfigurationError(f"unsupported thresholds setting {spec!r}")

    # -- fitting -------------------------------------------------------

    def fit(self, X, y=None):
        """Run both stages on an (n_samples, n_series) array."""
        if self.factor not in ("auto", "none"):
            raise ConfigurationError(f"factor must be 'auto' or 'none', got {self.factor!r}")
        d = int(self.var_order)
        if d < 1:
            raise ConfigurationError(f"var_order must be >= 1, got {d}")
        panel = check_panel(np.asarray(X, dtype=float).T)
        if self.demean:
            panel = panel - panel.mean(axis=1, keepdims=True)
        p, n = panel.shape
        plan = self._resolve_plan(n, p)
        for G in plan.var:
            if d > kernel_bandwidth(G):
                raise ConfigurationError(
                    f"var_order d={d} exceeds kernel bandwidth m={kernel_bandwidth(G)}"
                    f" at G={G}; increase the bandwidths or lower d"
                )
        kappa_fn, pi_fn = self._resolve_thresholds()
        self.n_, self.p_ = n, p
        self.bandwidth_plan_ = plan

        # Stage of the factor-driven component.
        self.factor_traces_ = {}
        self.factor_thresholds_ = {}
        per_G: dict[int, list[ChangePoint]] = {}
        if self.factor == "auto":
            for G in plan.factor:
                trace = compute_trace(panel, G, plan.m(G), n_jobs=self.n_jobs)
                scaled = scale_factor_trace(trace)
                kappa = float(kappa_fn(n, p, G))
                per_G[G] = scan_changes(
                    scaled, kappa, eta=self.eta_factor, refine=self.refine
                )
                self.factor_traces_[G] = scaled
                self.factor_thresholds_[G] = kappa
            self.factor_points_ = multiscale_merge(per_G)
        else:
            self.factor_points_ = []

        # Per-segment factor models and the adjusted ACV provider.
        if self.factor == "auto":
            boundaries = [cp.location for cp in self.factor_points_]
            self.segment_models_ = fit_segments(
                panel,
                boundaries,
                lambda length: max(d, kernel_bandwidth(length)),
                d,
                q=self.q,
                q_max=self.q_max,
                penalty_scale=self.ic_penalty_scale,
                n_jobs=self.n_jobs,
            )
            provider = XiAcvProvider(panel, self.segment_models_)
        else:
            self.segment_models_ = None
            provider = XiAcvProvider(panel, None)

        # Stage of the VAR component.
        self.var_traces_ = {}
        self.var_thresholds_ = {}
        self.lambdas_ = {}
        self.var_scales_ = {}
        per_G = {}
        for G in plan.var:
            lam = (
                cv_lambda(provider, G, G, d)
                if isinstance(self.lam, str) and self.lam == "cv"
                else float(self.lam)
            )
            denom = var_scale_denominator(provider, G, d)
            pi = float(pi_fn(n, p, G))
            result = scan_var_changes(
                provider, G, d, lam, threshold=pi,
                eta=self.eta_var, scale=denom,
            )
            per_G[G] = result.points
            self.var_traces_[G] = result
            self.var_thresholds_[G] = pi
            self.lambdas_[G] = lam
            self.var_scales_[G] = denom
        self.var_points_ = multiscale_merge(per_G)
        return self

    # -- downstream conveniences ----------------------------------------

    def _labels_from(self, points: list[ChangePoint]) -> np.ndarray:
        edges = [0, *[cp.location for cp in points], self.n_]
        labels = np.empty(self.n_, dtype=int)
        for k in range(len(edges) - 1):
            labels[edges[k] : edges[k + 1]] = k
        return labels

    def predict(self, X=None) -> np.ndarray:
        """Per-time-point segment labels induced by the VAR-stage estimates."""
        if not hasattr(self, "var_points_"):
            raise ValueError("estimator is not fitted")
        return self._labels_from(self.var_points_)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict()

    def segment_labels(self, component: str = "var") -> np.ndarray:
        if component == "var":
            return self._labels_from(self.var_points_)
        if component == "factor":
            return self._labels_from(self.factor_points_)
        raise ValueError(f"component must be 'var' or 'factor', got {component!r}")

    def results_dict(self) -> dict:
        """JSON-ready summary of the fitted segmentation."""
        out = {
            "schema_version": 1,
            "n": self.n_,
            "p": self.p_,
            "chi_points": [cp.to_record() for cp in self.factor_points_],
            "xi_points": [cp.to_record() for cp in self.var_points_],
            "bandwidths": {
                "factor": list(self.bandwidth_plan_.factor),
                "var": list(self.bandwidth_plan_.var),
            },
            "thresholds": {
                "factor": {str(G): v for G, v in self.factor_thresholds_.items()},
                "var": {str(G): v for G, v in self.var_thresholds_.items()},
            },
            "lambda": {str(G): v for G, v in self.lambdas_.items()},
        }
        if self.segment_models_ is not None:
            out["segments"] = [mod.to_record() for mod in self.segment_models_]
        return out
