import math

import numpy as np
import pytest

import glsm


def test_model_catalogue():
    names = glsm.model_names()
    assert "sm3" in names and "gaussian" in names
    assert glsm.param_names("SM3") == ["nu"]


def test_matern_closed_form():
    assert glsm.matern_rho(50.0, 50.0, 0.5) == pytest.approx(math.exp(-math.sqrt(2.0)), abs=1e-12)


def test_simulate_shape_and_determinism():
    sites = glsm.uniform_sites(10, seed=3)
    assert sites.shape == (10, 2)
    a = glsm.simulate("SM1", {}, sites, 40, seed=5)
    b = glsm.simulate("SM1", {}, sites, 40, seed=5)
    assert a.shape == (40, 10)
    assert np.array_equal(a, b)


def test_unknown_model_is_value_error():
    with pytest.raises(ValueError):
        glsm.simulate("SM9", {}, glsm.uniform_sites(3, seed=1), 5, seed=1)


def test_fit_returns_estimates():
    sites = glsm.uniform_sites(30, seed=1)
    x = glsm.simulate("SM1", {}, sites, 80, seed=2)
    r = glsm.fit(x, sites, "SM1")
    assert set(r["estimates"]) == {"phi", "eta"}
    assert 10.0 < r["estimates"]["phi"] < 200.0
    assert r["rows_used"] == 80


def test_tail_coefficients():
    assert glsm.chi_theory("SM3", {"nu": 2.0}, 0.5) == pytest.approx(0.391, abs=1e-3)
    assert glsm.chibar_theory("SM1", {}, 0.5) == pytest.approx(math.sqrt(3.0) - 1.0, abs=1e-12)
    u = np.linspace(0.001, 0.999, 999)
    assert glsm.chi_empirical(u, u, 0.9) == pytest.approx(1.0)


def test_conditional_simulation_gaussian():
    s1 = np.array([[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]])
    s2 = np.array([[10.0, 10.0]])
    d = glsm.conditional_simulate("Gaussian", {}, s1, np.array([1.0, 0.5, 0.2]), s2, burnin=0, steps=2000, thin=1)
    assert d.shape == (2000, 1)


def test_egpd_round_trip():
    p = {"sigma": 1.0, "xi": 0.2, "p": 0.7, "kappa1": 0.8, "kappa2": 3.0}
    y = np.array([0.1, 1.0, 5.0])
    assert np.allclose(glsm.egpd_quantile(glsm.egpd_cdf(y, p), p), y, rtol=1e-10)
    x = glsm.egpd_sample(p, 500, seed=4)
    f = glsm.egpd_fit(x)
    assert f["sigma"] > 0.0 and f["kappa2"] >= f["kappa1"]
