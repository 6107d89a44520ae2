"""Two-stage change point detection for high-dimensional time series.

The observed panel is modelled as the sum of a piecewise stationary
factor-driven component and a piecewise stationary sparse VAR
component.  Changes in the former are found by scanning operator-norm
contrasts of local spectral density estimates; changes in the latter by
scanning l-infinity contrasts of Yule-Walker residuals at an
l1-regularised inspection estimate, after the factor contribution has
been removed from the local autocovariances.
"""

from fvarseg.changepoints import ChangePoint
from fvarseg.dgp import DgpSpec, GeneratedDataset, gen_dataset, scenario_spec
from fvarseg.factor_adjust import (
    XiAcvProvider,
    estimate_factor_number,
    fit_segments,
    local_factor_acv,
    segment_spectral,
    truncate_rank,
)
from fvarseg.factor_seg import (
    DetectorTrace,
    compute_trace,
    refine_location,
    scan_changes,
    scan_grid,
    spectral_contrast,
)
from fvarseg.metrics import EvalReport, hausdorff, k_distribution, run_experiment
from fvarseg.segmenter import FactorVarSegmenter
from fvarseg.spectral import (
    acv_from_spectrum,
    bartlett_weight,
    fourier_frequencies,
    hermitian_opnorm,
    hermitian_top_eigs,
    local_acv,
    local_spectral,
)
from fvarseg.tuning import (
    BandwidthPlan,
    CalibrationResult,
    ThresholdModel,
    calibrate_thresholds,
    cv_lambda,
    default_bandwidths,
    kernel_bandwidth,
    multiscale_merge,
    scale_factor_trace,
)
from fvarseg.var_seg import (
    VarEstimate,
    build_yule_walker,
    l1_yule_walker,
    residual_contrast,
    scan_var_changes,
)

__version__ = "0.1.0"

__all__ = [
    "ChangePoint",
    "DgpSpec",
    "GeneratedDataset",
    "gen_dataset",
    "scenario_spec",
    "XiAcvProvider",
    "estimate_factor_number",
    "fit_segments",
    "local_factor_acv",
    "segment_spectral",
    "truncate_rank",
    "DetectorTrace",
    "compute_trace",
    "refine_location",
    "scan_changes",
    "scan_grid",
    "spectral_contrast",
    "EvalReport",
    "hausdorff",
    "k_distribution",
    "run_experiment",
    "FactorVarSegmenter",
    "acv_from_spectrum",
    "bartlett_weight",
    "fourier_frequencies",
    "hermitian_opnorm",
    "hermitian_top_eigs",
    "local_acv",
    "local_spectral",
    "BandwidthPlan",
    "CalibrationResult",
    "ThresholdModel",
    "calibrate_thresholds",
    "cv_lambda",
    "default_bandwidths",
    "kernel_bandwidth",
    "multiscale_merge",
    "scale_factor_trace",
    "VarEstimate",
    "build_yule_walker",
    "l1_yule_walker",
    "residual_contrast",
    "scan_var_changes",
]
