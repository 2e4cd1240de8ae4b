import math
import random

import pytest

import parcmi


def lognormal_sample(n=400, seed=3):
    rng = random.Random(seed)
    w, delta, z = [], [], []
    for _ in range(n):
        zi = rng.random() < 0.5
        x = math.exp(0.05 * zi + 0.5 * rng.gauss(0.0, 1.0))
        c = rng.expovariate(0.7)
        w.append(min(x, c))
        delta.append(int(x <= c))
        z.append([float(zi)])
    return w, delta, z


def test_fit_lognormal():
    w, delta, z = lognormal_sample()
    m = parcmi.fit("lognormal", w, delta, z)
    assert m.converged
    assert m.spec.family == "lognormal"
    assert m.k == 3 and m.n == len(w)
    assert m.aic == pytest.approx(2 * m.k - 2 * m.loglik)
    assert abs(m.spec.shape - 0.5) < 0.1
    assert '"loglik"' in m.to_json()


def test_conditional_means():
    spec = parcmi.FamilySpec("exponential", coefficients=[math.log(2.0)])
    # rate 1/2: memoryless mean residual life of 2.
    assert parcmi.cm_right(spec, [], 1.0) == pytest.approx(3.0, rel=1e-10)
    for s in ("analytic", "stab-mean", "stab-nomean", "integral"):
        assert parcmi.cm_right(spec, [], 1.0, strategy=s) == pytest.approx(3.0, rel=1e-4)
    assert parcmi.cm_interval(spec, [], 1.0, 1e12) == pytest.approx(3.0, rel=1e-6)
    inside = parcmi.cm_interval(spec, [], 1.0, 2.0)
    assert 1.0 < inside < 2.0

    assert parcmi.cm_lognormal_analytic(0.0, 1.0, 0.0) == pytest.approx(math.exp(0.5))
    assert parcmi.cm_weibull_analytic(1.0, 0.5, 1.0) == pytest.approx(3.0)
    assert parcmi.cm_loglogistic_analytic(3.0, 1.0, 0.0) == pytest.approx(
        (math.pi / 3.0) / math.sin(math.pi / 3.0))


def test_impute_and_analyze():
    w, delta, z = lognormal_sample()
    (one,) = parcmi.impute(w, delta, z)
    assert len(one) == len(w)
    for wi, di, vi in zip(w, delta, one):
        assert vi == wi if di else vi > wi
    many = parcmi.impute(w, delta, z, B=3, seed=5)
    assert len(many) == 3 and many == parcmi.impute(w, delta, z, B=3, seed=5)

    y = [1.0 + 0.5 * wi + 0.1 * zi[0] for wi, zi in zip(w, z)]
    res = parcmi.analyze(y, w, delta, z, B=4, seed=1)
    assert res["B"] == 4
    names = [c["name"] for c in res["coef"]]
    assert len(names) == 3
    slope = res["coef"][1]
    assert slope["ci_lower"] <= slope["estimate"] <= slope["ci_upper"]


def test_simulation():
    design = {"n": 200, "replicates": 3, "seed": 9}
    y, w, delta, z, x = parcmi.generate_replicate(design, 0)
    assert len(y) == len(w) == len(delta) == len(x) == 200
    assert all(wi <= xi for wi, xi in zip(w, x))
    assert parcmi.generate_replicate(design, 0)[1] == w
    res = parcmi.run_cell(design)
    assert res["method"]["used"] == 3
    assert 0.0 < res["censoring_fraction"] < 1.0


def test_errors():
    with pytest.raises(parcmi.ParcmiError):
        parcmi.fit("nonsense", [1.0, 2.0], [1, 1])
    with pytest.raises(parcmi.ParcmiError):
        parcmi.run_cell({"replicates": 1, "no_such_key": 1})
    spec = parcmi.FamilySpec("loglogistic", shape=0.8, coefficients=[0.0])
    with pytest.raises(parcmi.ParcmiError):
        parcmi.cm_right(spec, [], 1.0)
