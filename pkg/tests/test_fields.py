import itertools
import math

import numpy as np
import pytest
from scipy import stats

from exfield import rng
from exfield.fields import (FieldSample, IIDModel, Marginal, ModelError, MovingMaximum,
                            exact_exceed_hazard, exact_max_cdf, model_from_dict, simulate,
                            theoretical_theta, threshold)
from exfield.geometry import minkowski_sum_count

FRECHET = Marginal("frechet")
PAIR = [(0, 0), (1, 0)]
GRID_10 = np.array(list(itertools.product(range(10), repeat=2)))


def sites(n, d=2, offset=0):
    side = int(math.ceil(n ** (1 / d)))
    return np.array(list(itertools.product(range(offset, offset + side), repeat=d)))[:n]


# --------------------------------------------------------------------- rng


def test_uniforms_open_interval_and_deterministic():
    pts = sites(10_000)
    u1 = rng.uniforms(5, 3, pts)
    u2 = rng.uniforms(5, 3, pts)
    assert np.array_equal(u1, u2)
    assert u1.min() > 0 and u1.max() < 1


def test_uniforms_depend_on_every_key_part():
    pts = sites(1000)
    base = rng.uniforms(1, 0, pts)
    assert not np.array_equal(base, rng.uniforms(2, 0, pts))
    assert not np.array_equal(base, rng.uniforms(1, 1, pts))
    assert not np.array_equal(base, rng.uniforms(1, 0, pts, stream=rng.SELECTION))
    assert not np.array_equal(base, rng.uniforms(1, 0, pts + [1, 0]))


def test_uniforms_are_uniform():
    u = rng.uniforms(11, 0, sites(100_000))
    assert stats.kstest(u, "uniform").statistic < 0.01


def test_uniforms_handle_negative_coordinates():
    pts = sites(400, offset=-10)
    u = rng.uniforms(0, 0, pts)
    assert len(np.unique(u)) == len(u)


# --------------------------------------------------------------- marginals


@pytest.mark.parametrize("m", [Marginal("uniform"), Marginal("exponential", 2.0), FRECHET,
                               Marginal("pareto", 1.5)])
def test_quantile_inverts_cdf(m):
    p = np.linspace(0.001, 0.999, 999)
    x = m.quantile(p)
    assert np.allclose(m.cdf(x), p, rtol=1e-9, atol=0)
    assert np.allclose(m.quantile(m.cdf(x)), x, rtol=1e-9)
    assert np.allclose(m.sf(x), 1 - p, rtol=1e-9)
    assert np.allclose(m.isf(1 - p), x, rtol=1e-9)


def test_marginal_rejects_bad_spec():
    with pytest.raises(ModelError):
        Marginal("gumbel")
    with pytest.raises(ModelError):
        Marginal("pareto", 0)
    with pytest.raises(ModelError):
        Marginal.from_dict({"kind": "frechet", "alpha": 2})


# -------------------------------------------------------------- thresholds


def test_threshold_uniform():
    th = threshold(Marginal("uniform"), 10_000, 1.0)
    assert th.level == pytest.approx(0.9999, rel=1e-12)


def test_threshold_frechet():
    th = threshold(FRECHET, 10_000, 1.0)
    assert th.level == pytest.approx(-1 / math.log(1 - 1e-4), rel=1e-12)
    assert th.level == pytest.approx(9999.5, abs=0.01)
    assert 10_000 * (1 - math.exp(-1 / th.level)) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("m", [Marginal("uniform"), Marginal("exponential", 0.5), FRECHET,
                               Marginal("pareto", 3)])
def test_threshold_identity(m):
    th = threshold(m, 22801, 1.7)
    assert 22801 * float(m.sf(th.level)) == pytest.approx(1.7, rel=1e-9)


def test_threshold_rejects_large_tau():
    with pytest.raises(ModelError):
        threshold(Marginal("exponential"), 20, 20)


# ------------------------------------------------------------------ models


def test_noise_transform_identity():
    # P(Y <= y) = F(y)^(1/|B|) when Y = quantile_F(u^|B|)
    mm = MovingMaximum([(0, 0), (1, 0), (0, 1)], FRECHET)
    y = mm.noise(sites(100_000), 4, 0)
    ref = lambda v: np.exp(FRECHET.logcdf(v) / 3)
    assert stats.kstest(y, ref).statistic < 0.01


def test_singleton_pattern_is_iid():
    pts = sites(2000)
    a = MovingMaximum([(0, 0)], FRECHET).values(pts, 8, 2)
    b = IIDModel(FRECHET).values(pts, 8, 2)
    assert np.array_equal(a, b)


def test_windows_share_noise():
    mm = MovingMaximum(PAIR, FRECHET)
    Y = mm.noise(np.array([(0, 0), (1, 0), (2, 0)]), 1, 0)
    xi = mm.values(np.array([(0, 0), (1, 0)]), 1, 0)
    assert xi[0] == max(Y[0], Y[1]) and xi[1] == max(Y[1], Y[2])


@pytest.mark.parametrize("model", [IIDModel(FRECHET), MovingMaximum(PAIR, FRECHET),
                                   MovingMaximum([(0, 0), (1, 1), (0, 2)], Marginal("exponential"))])
def test_marginal_law_ks(model):
    v = model.values(sites(100_000), 21, 0)
    assert stats.kstest(v, lambda x: model.marginal.cdf(x)).statistic < 0.01


def test_m_dependence_correlation():
    mm = MovingMaximum(PAIR, Marginal("uniform"))
    r = mm.diameter
    a = sites(100_000)
    b = a + [r + 1, 0]
    va, vb = mm.values(a, 2, 0), mm.values(b, 2, 0)
    assert abs(np.corrcoef(va, vb)[0, 1]) <= 0.02
    near = mm.values(a + [1, 0], 2, 0)
    assert np.corrcoef(va, near)[0, 1] > 0.2


def test_pattern_validation():
    with pytest.raises(ModelError):
        MovingMaximum([(0, 0), (0, 0)], FRECHET)
    with pytest.raises(ModelError):
        MovingMaximum(np.zeros((0, 2)), FRECHET)


def test_dependence_spec_for_moving_maximum():
    dep = MovingMaximum([(0, 0), (2, 1)], FRECHET).dependence(2)
    assert dep.m == 2 and dep.gamma == (2, 2) and dep.alpha == 0.0


def test_model_dict_round_trip():
    for spec in ({"kind": "iid", "marginal": {"kind": "pareto", "alpha": 2.5}},
                 {"kind": "moving_maximum", "marginal": {"kind": "frechet"}, "pattern": [[0, 0], [1, 0]]}):
        assert model_from_dict(spec).to_dict() == spec
    with pytest.raises(ModelError):
        model_from_dict({"kind": "gaussian"})


# ----------------------------------------------------------------- samples


def test_simulate_deterministic_and_lookup():
    pts = sites(500)
    s1 = simulate(MovingMaximum(PAIR, FRECHET), pts, 3, 9)
    s2 = simulate(MovingMaximum(PAIR, FRECHET), pts, 3, 9)
    assert s1.values.tobytes() == s2.values.tobytes()
    assert np.array_equal(s1.lookup(pts[[7, 3]]), s1.values[[7, 3]])
    with pytest.raises(KeyError, match="not in sample domain"):
        s1.lookup([[1000, 1000]])


def test_simulate_window_independent():
    # a value depends only on its coordinate, not on which window is simulated
    big = simulate(IIDModel(FRECHET), sites(900), 0, 0)
    small = simulate(IIDModel(FRECHET), sites(900)[100:200], 0, 0)
    assert np.array_equal(big.lookup(small.domain), small.values)


def test_simulate_empty_support():
    with pytest.raises(ModelError):
        simulate(IIDModel(FRECHET), np.zeros((0, 2), int), 0, 0)


def test_field_sample_alignment():
    with pytest.raises(ModelError):
        FieldSample(np.zeros((3, 2)), np.zeros(2))


# ----------------------------------------------------------------- oracles


def test_exact_max_cdf_iid():
    u = Marginal("uniform")
    D = sites(10_000)
    assert exact_max_cdf(IIDModel(u), D, 0.9999) == pytest.approx(0.9999**10_000, rel=1e-12)
    assert exact_max_cdf(IIDModel(u), D, 0.9999) == pytest.approx(0.36786, abs=1e-5)


def test_exact_max_cdf_moving_max_example():
    # F(x) = 0.99 under the uniform marginal at x = 0.99
    mm = MovingMaximum(PAIR, Marginal("uniform"))
    assert minkowski_sum_count(GRID_10, mm.pattern) == 110
    assert exact_max_cdf(mm, GRID_10, 0.99) == pytest.approx(0.99 ** 55, rel=1e-12)
    assert exact_max_cdf(mm, GRID_10, 0.99) == pytest.approx(0.5754, abs=1e-4)


def test_exact_max_cdf_below_support():
    mm = MovingMaximum(PAIR, Marginal("pareto", 2))
    assert exact_max_cdf(mm, GRID_10, 0.5) == 0.0
    assert exact_max_cdf(MovingMaximum(PAIR, FRECHET), GRID_10, -1.0) == 0.0


def test_exact_hazard_against_enumeration():
    # P(M(A) <= x < xi_0) by Monte Carlo on a tiny A, compared with the closed form
    mm = MovingMaximum(PAIR, Marginal("uniform"))
    A = np.array([(0, 1), (1, 0)])
    x = 0.7
    R = 200_000
    pts = np.vstack([A, [(0, 0)]])
    # independent copies: translates far enough apart to share no noise
    shifts = np.arange(R)[:, None] * np.array([10, 0])
    all_pts = (pts[None, :, :] + shifts[:, None, :]).reshape(-1, 2)
    v = mm.values(all_pts, 5, 0).reshape(R, 3)
    emp = np.mean((v[:, :2].max(axis=1) <= x) & (v[:, 2] > x))
    exact = exact_exceed_hazard(mm, A, x)
    se = math.sqrt(exact * (1 - exact) / R)
    assert abs(emp - exact) < 4 * se


def test_exact_hazard_iid():
    m = Marginal("uniform")
    assert exact_exceed_hazard(IIDModel(m), np.array([(0, 1), (1, 0)]), 0.5) == pytest.approx(0.125)


def test_oracle_consistency_small_region():
    # empirical P(max <= x) over 4000 replications within 3 SE of the exact law
    mm = MovingMaximum(PAIR, FRECHET)
    D = sites(400)
    x = threshold(FRECHET, len(D), 1.0).level
    support = np.unique(np.vstack([D, D + [1, 0]]), axis=0)
    R = 4000
    hits = 0
    for r in range(R):
        hits += mm.values(D, 17, r).max() <= x
    p = exact_max_cdf(mm, D, x)
    assert abs(hits / R - p) <= 3 * math.sqrt(p * (1 - p) / R)
    assert len(support) == minkowski_sum_count(D, mm.pattern)


def test_theoretical_theta():
    assert theoretical_theta(IIDModel(FRECHET)) == 1.0
    assert theoretical_theta(MovingMaximum(PAIR, FRECHET)) == 0.5
    assert theoretical_theta(MovingMaximum([(0, 0)], FRECHET)) == 1.0
    with pytest.raises(ModelError):
        theoretical_theta(object())
