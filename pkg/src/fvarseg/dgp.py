"""Data generators for the benchmark experiments.

Three building blocks are provided: a factor-driven component with
order-2 MA loadings (admits a static factor representation), one with
heterogeneous AR(1) loading filters (does not), and a piecewise
stationary sparse VAR component whose coefficient supports come from a
directed Erdos-Renyi graph.  Innovation streams are continuous across
segments, so the pieces stay dependent across change points; only the
coefficients switch.  Every draw comes from a labelled Philox stream
derived from the master seed (see :mod:`fvarseg.rng`), which makes
generation bit-reproducible and independent of worker scheduling.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from fvarseg.errors import ConfigurationError
from fvarseg.rng import derive_rng
from fvarseg.validation import PanelSeries

logger = logging.getLogger(__name__)

CHI_PRESAMPLE = 2  # MA(2) loadings need two presample shocks
CHI_BURN_IN = 100  # AR(1) loading filters
VAR_BURN_IN = 200
MAX_GRAPH_RETRIES = 10


@dataclass
class DgpSpec:
    """Configuration of one synthetic dataset.

    ``chi_changes`` and ``xi_changes`` are the true change locations of
    the factor-driven and VAR components, strictly inside (0, n).  The
    ``beta_decay`` parameter shrinks the VAR coefficient flip at the
    k-th change (``A -> -beta^k A``); smaller values mean smaller
    changes.
    """

    n: int
    p: int
    q: int = 2
    d: int = 1
    scenario: str = "custom"
    chi_model: str | None = "c1"  # "c1", "c2" or None
    chi_changes: tuple[int, ...] = ()
    xi_changes: tuple[int, ...] = ()
    beta_decay: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.chi_changes = tuple(int(c) for c in self.chi_changes)
        self.xi_changes = tuple(int(c) for c in self.xi_changes)
        for label, changes in (("chi", self.chi_changes), ("xi", self.xi_changes)):
            if list(changes) != sorted(set(changes)):
                raise ConfigurationError(f"{label} changes must be sorted and unique")
            if changes and (changes[0] <= 0 or changes[-1] >= self.n):
                raise ConfigurationError(
                    f"{label} changes must lie strictly inside (0, {self.n})"
                )
        if self.chi_model not in (None, "c1", "c2"):
            raise ConfigurationError(f"unknown chi model {self.chi_model!r}")
        if self.q > self.p:
            raise ConfigurationError(f"q={self.q} exceeds p={self.p}")


@dataclass
class GeneratedDataset:
    X: PanelSeries
    chi: np.ndarray
    xi: np.ndarray
    spec: DgpSpec
    truth: dict = field(default_factory=dict)
    chi_meta: dict = field(default_factory=dict, repr=False)
    xi_meta: dict = field(default_factory=dict, repr=False)


def scenario_spec(
    scenario: str,
    n: int = 2000,
    p: int = 50,
    seed: int = 0,
    n_changes: int | None = None,
    d: int | None = None,
) -> DgpSpec:
    """Named benchmark configurations.

    M1: MA-loading factors with three factor changes and two VAR changes;
    M2: AR-filter factors with coinciding factor/VAR changes;
    M3: pure VAR with two (or zero) changes and damped coefficient flips.
    ``n_changes=0`` selects the no-change variant of each scenario.
    """
    scenario = scenario.upper()
    if scenario == "M1":
        chi = () if n_changes == 0 else (n // 4, n // 2, 3 * n // 4)
        return DgpSpec(
            n=n, p=p, q=2, d=1, scenario="M1", chi_model="c1",
            chi_changes=chi, xi_changes=(3 * n // 8, 5 * n // 8),
            beta_decay=1.0, seed=seed,
        )
    if scenario == "M2":
        chi = () if n_changes == 0 else (n // 3, 2 * n // 3)
        return DgpSpec(
            n=n, p=p, q=2, d=1, scenario="M2", chi_model="c2",
            chi_changes=chi, xi_changes=(n // 3, 2 * n // 3),
            beta_decay=1.0, seed=seed,
        )
    if scenario == "M3":
        d = 1 if d is None else d
        if d not in (1, 2):
            raise ConfigurationError(f"M3 supports d in {{1, 2}}, got {d}")
        xi = () if n_changes == 0 else (3 * n // 8, 5 * n // 8)
        return DgpSpec(
            n=n, p=p, q=0, d=d, scenario="M3", chi_model=None,
            chi_changes=(), xi_changes=xi,
            beta_decay=0.6 if d == 1 else 0.8, seed=seed,
        )
    raise ConfigurationError(
        f"unknown scenario {scenario!r}; valid scenarios are M1, M2, M3"
    )


def _segment_index(t: int, changes: tuple[int, ...]) -> int:
    """Index k of the segment (c_k, c_{k+1}] containing time t."""
    k = 0
    for c in changes:
        if t > c:
            k += 1
    return k


def compose_ma_loadings(loadings: np.ndarray, shocks: np.ndarray, changes) -> np.ndarray:
    """Apply per-segment order-2 MA loadings to a shared shock stream.

    ``loadings`` has shape (n_segments, 3, p, q); ``shocks`` has shape
    (q, n + 2) containing two presample columns.  Column t-1+2 of the
    shock stream drives time t.
    """
    n_seg, order, p, q = loadings.shape
    n = shocks.shape[1] - CHI_PRESAMPLE
    chi = np.empty((p, n))
    edges = [0, *changes, n]
    for k in range(n_seg):
        lo, hi = edges[k], edges[k + 1]
        cols = np.arange(lo, hi) + CHI_PRESAMPLE
        chi[:, lo:hi] = (
            loadings[k, 0] @ shocks[:, cols]
            + loadings[k, 1] @ shocks[:, cols - 1]
            + loadings[k, 2] @ shocks[:, cols - 2]
        )
    return chi


def gen_chi_c1(spec: DgpSpec, seed: int | None = None):
    """Factor component with per-segment MA(2) loading coefficients.

    Loadings are standard normal and redrawn at each change for a subset
    of ``floor(p/2)`` rows; shocks are shared across segments with
    per-factor standard deviations 1, 0.5, 0.25, ...
    """
    seed = spec.seed if seed is None else seed
    p, q, n = spec.p, spec.q, spec.n
    if q > p:
        raise ConfigurationError(f"q={q} exceeds p={p}")
    rng_load = derive_rng(seed, "chi", "loadings")
    rng_shock = derive_rng(seed, "chi", "shocks")
    n_seg = len(spec.chi_changes) + 1
    loadings = np.empty((n_seg, 3, p, q))
    loadings[0] = rng_load.standard_normal((3, p, q))
    for k in range(1, n_seg):
        loadings[k] = loadings[k - 1]
        redraw = rng_load.choice(p, size=p // 2, replace=False)
        loadings[k, :, redraw, :] = rng_load.standard_normal((redraw.size, 3, q))
    sigma = 0.5 ** np.arange(q)
    shocks = sigma[:, None] * rng_shock.standard_normal((q, n + CHI_PRESAMPLE))
    chi = compose_ma_loadings(loadings, shocks, spec.chi_changes)
    return chi, {"loadings": loadings, "shock_sigma": sigma}


def compose_ar_filters(
    amp: np.ndarray, alphas: np.ndarray, shocks: np.ndarray, changes
) -> np.ndarray:
    """Run per-pair AR(1) filters continuously over the shock stream.

    ``amp`` and each ``alphas[k]`` have shape (p, q); ``shocks`` has
    shape (q, n + burn_in) and the first burn-in columns warm the
    filters up under the first segment's coefficients.
    """
    p, q = amp.shape
    n = shocks.shape[1] - CHI_BURN_IN
    chi = np.empty((p, n))
    state = np.zeros((p, q))
    for t in range(-CHI_BURN_IN + 1, n + 1):
        k = _segment_index(max(t, 1), tuple(changes))
        state = alphas[k] * state + shocks[:, t + CHI_BURN_IN - 1]
        if t >= 1:
            chi[:, t - 1] = (amp * state).sum(axis=1)
    return chi


def gen_chi_c2(spec: DgpSpec, seed: int | None = None):
    """Factor component loading AR(1) filters of the common shocks.

    Each (series, factor) pair applies its own AR(1) filter with
    coefficient drawn from U[-0.8, 0.8]; at a change the coefficient
    flips sign on a subset of ``floor(p/2)`` rows.  The filters run
    continuously on the shared shock stream (100-step burn-in), only
    their coefficients switch.
    """
    seed = spec.seed if seed is None else seed
    p, q, n = spec.p, spec.q, spec.n
    rng_load = derive_rng(seed, "chi", "loadings")
    rng_shock = derive_rng(seed, "chi", "shocks")
    n_seg = len(spec.chi_changes) + 1
    amp = rng_load.uniform(-1.0, 1.0, size=(p, q))
    alphas = np.empty((n_seg, p, q))
    alphas[0] = rng_load.uniform(-0.8, 0.8, size=(p, q))
    for k in range(1, n_seg):
        alphas[k] = alphas[k - 1]
        flip = rng_load.choice(p, size=p // 2, replace=False)
        alphas[k, flip, :] *= -1.0
    shocks = rng_shock.standard_normal((q, n + CHI_BURN_IN))
    chi = compose_ar_filters(amp, alphas, shocks, spec.chi_changes)
    return chi, {"amplitudes": amp, "alphas": alphas}


def _companion_radius(A_list: list[np.ndarray]) -> float:
    """Spectral radius of the companion matrix of a VAR(d) system."""
    d = len(A_list)
    p = A_list[0].shape[0]
    top = np.hstack(A_list)
    if d == 1:
        comp = top
    else:
        comp = np.vstack([top, np.eye(p * (d - 1), p * d)])
    return float(np.abs(np.linalg.eigvals(comp)).max())


def gen_piecewise_var(spec: DgpSpec, seed: int | None = None):
    """Piecewise stationary sparse VAR component with identity innovations.

    Coefficients start from a directed Erdos-Renyi support (link
    probability 1/p over all ordered pairs) with entries 0.4, rescaled
    to spectral norm 1 (d=1) or 0.5 per lag (d=2+); at the k-th change
    every lag matrix maps to ``-beta^k`` times its predecessor.  The
    recursion runs through all change points on one innovation stream
    with a 200-step burn-in.
    """
    seed = spec.seed if seed is None else seed
    p, n, d = spec.p, spec.n, spec.d
    target = 1.0 if d == 1 else 0.5
    if p == 1 and target >= 1.0:
        raise ConfigurationError(
            "p=1 with target spectral norm 1 is never stable; need p >= 2"
        )
    rng_graph = derive_rng(seed, "xi", "graph")
    rng_innov = derive_rng(seed, "xi", "innovations")
    n_seg = len(spec.xi_changes) + 1

    def draw_coeffs() -> list[np.ndarray]:
        coeffs = []
        for _ in range(d):
            for _attempt in range(MAX_GRAPH_RETRIES):
                A = 0.4 * (rng_graph.random((p, p)) < 1.0 / p)
                norm = np.linalg.norm(A, 2)
                if norm > 0:
                    coeffs.append(A * (target / norm))
                    break
            else:
                raise ConfigurationError(
                    f"no nonempty graph on {p} vertices in {MAX_GRAPH_RETRIES} draws"
                )
        return coeffs

    for _attempt in range(MAX_GRAPH_RETRIES):
        base = draw_coeffs()
        segment_coeffs = [base]
        for k in range(1, n_seg):
            factor = -(spec.beta_decay**k)
            segment_coeffs.append([factor * A for A in segment_coeffs[k - 1]])
        radii = [_companion_radius(cs) for cs in segment_coeffs]
        if max(radii) < 1.0:
            break
        logger.info("unstable VAR draw (radius %.4f), regenerating", max(radii))
    else:
        raise ConfigurationError(
            f"could not draw a stable VAR system in {MAX_GRAPH_RETRIES} attempts"
        )

    innov = rng_innov.standard_normal((p, n + VAR_BURN_IN))
    xi = np.zeros((p, n + VAR_BURN_IN))
    for col in range(n + VAR_BURN_IN):
        t = col - VAR_BURN_IN + 1  # 1-based time of this column
        coeffs = segment_coeffs[_segment_index(max(t, 1), spec.xi_changes)]
        acc = innov[:, col].copy()
        for lag, A in enumerate(coeffs, start=1):
            if col - lag >= 0:
                acc += A @ xi[:, col - lag]
        xi[:, col] = acc
    return xi[:, VAR_BURN_IN:], {
        "coefficients": segment_coeffs,
        "companion_radii": radii,
    }


def _warn_tight_spacing(spec: DgpSpec) -> None:
    edges = lambda changes: [0, *changes, spec.n]  # noqa: E731
    gaps = [
        b - a
        for changes in (spec.chi_changes, spec.xi_changes)
        if changes
        for a, b in zip(edges(changes), edges(changes)[1:])
    ]
    coarsest = spec.n // 4  # largest default scan bandwidth
    if gaps and min(gaps) < 2 * coarsest:
        warnings.warn(
            f"minimum change spacing {min(gaps)} is below 2*G for the coarsest "
            f"default bandwidth G={coarsest}; windows at that scale straddle "
            "two changes (finer bandwidths still apply)",
            stacklevel=2,
        )


def gen_dataset(spec: DgpSpec) -> GeneratedDataset:
    """Compose the factor and VAR components into one observed panel."""
    _warn_tight_spacing(spec)
    if spec.chi_model == "c1":
        chi, chi_meta = gen_chi_c1(spec)
    elif spec.chi_model == "c2":
        chi, chi_meta = gen_chi_c2(spec)
    else:
        chi, chi_meta = np.zeros((spec.p, spec.n)), {}
    xi, xi_meta = gen_piecewise_var(spec)
    X = PanelSeries(chi + xi)
    truth = {
        "scenario": spec.scenario,
        "n": spec.n,
        "p": spec.p,
        "q": 0 if spec.chi_model is None else spec.q,
        "d": spec.d,
        "chi_changes": list(spec.chi_changes),
        "xi_changes": list(spec.xi_changes),
        "beta_decay": spec.beta_decay,
        "seed": spec.seed,
        "chi_model": spec.chi_model,
    }
    return GeneratedDataset(
        X=X, chi=chi, xi=xi, spec=spec, truth=truth,
        chi_meta=chi_meta, xi_meta=xi_meta,
    )
