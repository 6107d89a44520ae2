"""Simulation generators: construction rules and determinism."""

import numpy as np
import pytest

from fvarseg.dgp import (
    CHI_BURN_IN,
    CHI_PRESAMPLE,
    DgpSpec,
    compose_ar_filters,
    compose_ma_loadings,
    gen_chi_c1,
    gen_chi_c2,
    gen_dataset,
    gen_piecewise_var,
    scenario_spec,
)
from fvarseg.errors import ConfigurationError


def test_ma_passthrough_single_factor():
    # B = (1, 0, 0) makes the component reproduce the shock stream
    n, p, q = 12, 2, 1
    loadings = np.zeros((1, 3, p, q))
    loadings[0, 0] = 1.0
    shocks = np.arange(1.0, n + CHI_PRESAMPLE + 1.0)[None, :]
    chi = compose_ma_loadings(loadings, shocks, [])
    np.testing.assert_array_equal(chi[0], shocks[0, CHI_PRESAMPLE:])
    np.testing.assert_array_equal(chi[1], shocks[0, CHI_PRESAMPLE:])


def test_ma_loadings_kept_outside_redraw_set():
    spec = DgpSpec(n=40, p=10, q=2, chi_model="c1", chi_changes=(20,), seed=3)
    _, meta = gen_chi_c1(spec)
    loadings = meta["loadings"]
    equal_rows = [
        i for i in range(10) if np.array_equal(loadings[0, :, i], loadings[1, :, i])
    ]
    assert len(equal_rows) == 10 - 5  # |Pi| = floor(p/2) rows redrawn


def test_chi_c1_shape_and_determinism():
    spec = DgpSpec(n=30, p=6, q=2, chi_model="c1", chi_changes=(15,), seed=9)
    chi1, _ = gen_chi_c1(spec)
    chi2, _ = gen_chi_c1(spec)
    assert chi1.shape == (6, 30)
    np.testing.assert_array_equal(chi1, chi2)


def test_ar_filters_memoryless_when_alpha_zero():
    n, p, q = 10, 3, 2
    amp = np.arange(1.0, p * q + 1.0).reshape(p, q)
    alphas = np.zeros((1, p, q))
    rng = np.random.default_rng(0)
    shocks = rng.standard_normal((q, n + CHI_BURN_IN))
    chi = compose_ar_filters(amp, alphas, shocks, [])
    want = amp @ shocks[:, CHI_BURN_IN:]
    np.testing.assert_allclose(chi, want, atol=1e-12)


def test_ar_filter_impulse_response():
    # unit shock at time 1, alpha = 0.5: geometric decay 0.5^(t-1)
    n = 8
    amp = np.array([[1.0]])
    alphas = np.array([[[0.5]]])
    shocks = np.zeros((1, n + CHI_BURN_IN))
    shocks[0, CHI_BURN_IN] = 1.0
    chi = compose_ar_filters(amp, alphas, shocks, [])
    np.testing.assert_allclose(chi[0], 0.5 ** np.arange(n), atol=1e-12)


def test_ar_filters_sign_flip_structure():
    spec = DgpSpec(n=40, p=8, q=2, chi_model="c2", chi_changes=(20,), seed=5)
    _, meta = gen_chi_c2(spec)
    alphas = meta["alphas"]
    flipped = [i for i in range(8) if np.array_equal(alphas[1, i], -alphas[0, i])]
    kept = [i for i in range(8) if np.array_equal(alphas[1, i], alphas[0, i])]
    assert len(flipped) == 4 and len(kept) == 4


def test_var_sign_flip_and_rescale():
    spec = DgpSpec(
        n=60, p=10, d=1, chi_model=None, q=0, xi_changes=(30,),
        beta_decay=1.0, seed=2,
    )
    xi, meta = gen_piecewise_var(spec)
    A0 = meta["coefficients"][0][0]
    A1 = meta["coefficients"][1][0]
    np.testing.assert_array_equal(A1, -A0)
    assert np.linalg.norm(A0, 2) == pytest.approx(1.0, abs=1e-10)
    assert max(meta["companion_radii"]) < 1.0
    assert xi.shape == (10, 60)


def test_var_d2_rescale_and_stability():
    spec = DgpSpec(
        n=50, p=8, d=2, chi_model=None, q=0, xi_changes=(25,),
        beta_decay=0.8, seed=4,
    )
    _, meta = gen_piecewise_var(spec)
    for A in meta["coefficients"][0]:
        assert np.linalg.norm(A, 2) == pytest.approx(0.5, abs=1e-10)
    A10, A11 = meta["coefficients"][0][0], meta["coefficients"][1][0]
    np.testing.assert_allclose(A11, -0.8 * A10, atol=1e-12)
    assert max(meta["companion_radii"]) < 1.0


def test_var_scalar_guard():
    spec = DgpSpec(n=50, p=1, d=1, chi_model=None, q=0, seed=0)
    with pytest.raises(ConfigurationError):
        gen_piecewise_var(spec)


def test_var_determinism():
    spec = DgpSpec(n=40, p=6, d=1, chi_model=None, q=0, seed=11)
    xi1, _ = gen_piecewise_var(spec)
    xi2, _ = gen_piecewise_var(spec)
    np.testing.assert_array_equal(xi1, xi2)


def test_scenario_specs_match_benchmark_table():
    m1 = scenario_spec("M1", n=2000, p=50)
    assert m1.chi_changes == (500, 1000, 1500)
    assert m1.xi_changes == (750, 1250)
    assert m1.chi_model == "c1" and m1.d == 1 and m1.beta_decay == 1.0
    m2 = scenario_spec("M2", n=2000, p=50)
    assert m2.chi_changes == (666, 1333) and m2.xi_changes == (666, 1333)
    assert m2.chi_model == "c2"
    m3 = scenario_spec("M3", n=2000, p=50)
    assert m3.chi_model is None and m3.beta_decay == 0.6
    assert m3.xi_changes == (750, 1250)
    m3b = scenario_spec("M3", n=2000, p=50, d=2)
    assert m3b.beta_decay == 0.8
    assert scenario_spec("M1", n=2000, p=50, n_changes=0).chi_changes == ()
    with pytest.raises(ConfigurationError):
        scenario_spec("M9")


def test_gen_dataset_composition_identity():
    data = gen_dataset(scenario_spec("M1", n=200, p=8, seed=7))
    np.testing.assert_array_equal(data.X.values, data.chi + data.xi)
    assert data.truth["xi_changes"] == [75, 125]
    m3 = gen_dataset(scenario_spec("M3", n=200, p=8, seed=7))
    np.testing.assert_array_equal(m3.chi, np.zeros((8, 200)))
    assert m3.truth["q"] == 0


def test_gen_dataset_bit_identical_rerun():
    spec = scenario_spec("M2", n=150, p=6, seed=13)
    a = gen_dataset(spec)
    b = gen_dataset(spec)
    np.testing.assert_array_equal(a.X.values, b.X.values)


def test_tight_spacing_warns():
    import warnings as w

    tight = scenario_spec("M1", n=2000, p=8, seed=0)  # spacing 250 < 2*(n/4)
    with w.catch_warnings(record=True) as caught:
        w.simplefilter("always")
        gen_dataset(tight)
    assert any("spacing" in str(c.message) for c in caught)
    wide = DgpSpec(n=2000, p=8, q=0, d=1, chi_model=None, xi_changes=(1000,),
                   seed=0)
    with w.catch_warnings(record=True) as caught:
        w.simplefilter("always")
        gen_dataset(wide)
    assert not any("spacing" in str(c.message) for c in caught)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        DgpSpec(n=100, p=4, chi_changes=(50, 30))
    with pytest.raises(ConfigurationError):
        DgpSpec(n=100, p=4, xi_changes=(100,))
    with pytest.raises(ConfigurationError):
        DgpSpec(n=100, p=4, chi_model="c9")
    with pytest.raises(ConfigurationError):
        DgpSpec(n=100, p=2, q=5)
