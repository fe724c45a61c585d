import json

import numpy as np
import pytest

import vsepcf

UNIT = (0.0, 0.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def thomas():
    return vsepcf.simulate("thomas", UNIT, seed=4, stream=2)


def test_simulate_shape_and_reproducibility(thomas):
    assert thomas.ndim == 2 and thomas.shape[1] == 2
    assert np.all((thomas >= 0) & (thomas <= 1))
    again = vsepcf.simulate("thomas", UNIT, seed=4, stream=2)
    np.testing.assert_array_equal(thomas, again)


def test_simulate_overrides_and_errors():
    x = vsepcf.simulate("poisson", (0, 0, 2, 2), seed=1, rho=10)
    assert 10 < len(x) < 80
    with pytest.raises(ValueError):
        vsepcf.simulate("poisson", UNIT, gamma=1.0)
    with pytest.raises(ValueError):
        vsepcf.simulate("dpp", UNIT)


def test_vse_auto(thomas):
    fit = vsepcf.fit_vse(thomas, UNIT)
    assert fit.kind == "vse"
    assert fit.selected >= 2
    assert len(fit.coefficients) == fit.selected
    r = np.linspace(0, 0.125, 50)
    g = fit(r)
    assert g.shape == r.shape
    assert np.all(g > 0)
    assert g[0] > 2


def test_vse_fixed_k_is_intensity_scale_invariant(thomas):
    a = vsepcf.fit_vse(thomas, UNIT, rho=100.0, K=4)
    b = vsepcf.fit_vse(thomas, UNIT, rho=1000.0, K=4)
    np.testing.assert_allclose(a.coefficients, b.coefficients, rtol=1e-12)


def test_baselines(thomas):
    ose = vsepcf.fit_ose(thomas, UNIT, k_max=10)
    assert ose.kind == "ose" and len(ose.cv) == 10
    kde = vsepcf.fit_kde(thomas, UNIT)
    assert kde.selected in kde.tuning
    assert np.all(kde(np.linspace(0, 0.125, 20)) >= 0)


def test_json_round_trip(thomas):
    fit = vsepcf.fit_vse(thomas, UNIT, K=3)
    text = fit.to_json()
    assert json.loads(text)["kind"] == "vse"
    back = vsepcf.Fit.from_json(text)
    r = np.linspace(0, 0.125, 9)
    np.testing.assert_array_equal(fit(r), back(r))


def test_true_pcf():
    r = np.array([0.0, 0.05, 0.1])
    np.testing.assert_array_equal(vsepcf.true_pcf("poisson", r), np.ones(3))
    assert vsepcf.true_pcf("thomas", r)[0] > vsepcf.true_pcf("thomas", r)[2] > 1


def test_outside_range_raises(thomas):
    fit = vsepcf.fit_vse(thomas, UNIT, K=2)
    with pytest.raises(ValueError):
        fit(np.array([0.5]))


def test_run_benchmark():
    rows = vsepcf.run_benchmark(
        "replicates = 2\nk_max = 6\ncurve_points = 10\nestimators = vse\ncell = poisson 0,0,1,1\n"
    )
    assert len(rows) == 1
    assert rows[0]["estimator"] == "vse"
    assert rows[0]["positivity_violations"] == 0
    assert len(rows[0]["r"]) == 10
