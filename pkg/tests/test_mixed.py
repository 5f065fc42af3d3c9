import math

import numpy as np
import pytest
from scipy import optimize, stats

from bradyquant.exceptions import DegenerateGroups
from bradyquant.stats.mixed import fit_mixed, simulate_mixed


def dense_neg_reml(log_params, y, Z):
    """-REML log-likelihood from the full marginal covariance (constants dropped)."""
    s2u, s2e = np.exp(log_params)
    n = len(y)
    V = s2e * np.eye(n) + s2u * Z @ Z.T
    Vi = np.linalg.inv(V)
    one = np.ones(n)
    info = one @ Vi @ one
    beta = (one @ Vi @ y) / info
    r = y - beta
    _, logdet = np.linalg.slogdet(V)
    return 0.5 * (logdet + math.log(info) + r @ Vi @ r), beta, info


def dense_fit(y, groups):
    labels = sorted(set(groups))
    Z = np.array([[g == lab for lab in labels] for g in groups], dtype=float)
    start = np.log([max(np.var(y), 1e-3) / 2] * 2)
    res = optimize.minimize(lambda p: dense_neg_reml(p, y, Z)[0], start, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
    _, beta, info = dense_neg_reml(res.x, y, Z)
    s2u, s2e = np.exp(res.x)
    return beta, s2u, s2e, math.sqrt(1 / info), res.fun, Z


@pytest.mark.parametrize("seed", range(4))
def test_matches_dense_reml(seed):
    rng = np.random.default_rng(seed)
    sizes = [6, 9, 12, 7][: 3 + seed % 2]
    groups = sum(([f"g{j}"] * n for j, n in enumerate(sizes)), [])
    u = rng.normal(0, 1.0, len(sizes))
    y = np.array([0.3 + u[int(g[1:])] + rng.normal(0, 0.5) for g in groups])
    m = fit_mixed(y, groups)
    beta, s2u, s2e, se, best, Z = dense_fit(y, groups)
    ours = dense_neg_reml(np.log([max(m.sigma2_u, 1e-300), m.sigma2_e]), y, Z)[0]
    assert ours <= best + 1e-8
    assert m.beta0 == pytest.approx(beta, abs=1e-4)
    assert m.sigma2_u == pytest.approx(s2u, rel=1e-3)
    assert m.sigma2_e == pytest.approx(s2e, rel=1e-3)
    assert m.se == pytest.approx(se, rel=1e-3)


def test_all_zero_differences():
    m = fit_mixed(np.zeros(12), ["FT"] * 4 + ["HM"] * 4 + ["RA"] * 4)
    assert m.beta0 == 0.0 and m.sigma2_u == 0.0 and m.p_value == 1.0
    assert "degenerate_se" in m.flags


def test_single_group_is_one_sample_wald():
    y = np.random.default_rng(2).normal(0.3, 1.0, 25)
    m = fit_mixed(y, ["FT"] * 25)
    assert "single_group" in m.flags
    assert abs(m.beta0 - y.mean()) < 1e-12
    t = stats.ttest_1samp(y, 0.0).statistic
    assert abs(m.beta0 / m.se - t) < 1e-9
    assert abs(m.p_value - 2 * stats.norm.sf(abs(t))) < 1e-9


def test_degenerate_groups():
    with pytest.raises(DegenerateGroups):
        fit_mixed([1.0, 2.0, 3.0], ["FT", "FT", "HM"])
    with pytest.raises(DegenerateGroups):
        fit_mixed([], [])
    with pytest.raises(DegenerateGroups):
        fit_mixed([1.0, np.nan], ["FT", "FT"])


def test_variances_nonnegative_when_groups_identical():
    y = np.tile([0.1, -0.2, 0.4, 0.0], 3)
    m = fit_mixed(y, np.repeat(["FT", "HM", "RA"], 4))
    assert m.sigma2_u == 0.0 and m.sigma2_e > 0


def test_calibration_null():
    fits = [fit_mixed(*simulate_mixed(30, 0.0, 0.1, 0.5, seed)) for seed in range(20)]
    assert sum(m.p_value >= 0.05 for m in fits) >= 17
    assert sum(abs(m.beta0) <= 3 * m.se for m in fits) >= 17
    assert all(m.sigma2_u >= 0 and m.sigma2_e > 0 for m in fits)
