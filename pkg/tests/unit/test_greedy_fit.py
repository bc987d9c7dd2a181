import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from greedy_predict.core.exceptions import AllExcludedError, ConfigError, DimensionMismatchError
from greedy_predict.models.design import RawDesign, SuffStats
from greedy_predict.schemas.schemas import AlgoConfig, Algorithm, WeightRule
from greedy_predict.services.design_matrix import standardize, suffstats_from
from greedy_predict.services.greedy_fit import (
    FITTER_REGISTRY,
    coeffs_raw,
    fit,
    fit_oga,
    get_fitter,
    predict,
    predict_steps,
    select_regressor,
)
from greedy_predict.services.oracles import objective, ols_dense
from tests import reference_fits
from tests.factories import random_design

SEEDS = range(20)


def _setup(seed, n=50, K=10):
    design = standardize(random_design(seed, n=n, K=K))
    return design, suffstats_from(design)


# ---- selection ----

def test_select_regressor_breaks_ties_towards_smallest_index():
    assert select_regressor(np.array([0.5, -2.0, 2.0, 1.0])) == 1
    assert select_regressor(np.array([0.5, -2.0, 2.0]), signed=True) == 2


def test_select_regressor_exclusions():
    a = np.array([3.0, 2.0, 1.0])
    assert select_regressor(a, excluded=[0]) == 1
    assert select_regressor(a, excluded=np.array([True, True, False])) == 2
    with pytest.raises(AllExcludedError):
        select_regressor(a, excluded=[0, 1, 2])


# ---- agreement with direct n-space fits ----

@pytest.mark.parametrize("seed", SEEDS)
def test_pga_matches_reference(seed):
    design, stats = _setup(seed)
    path = fit(stats, AlgoConfig(algorithm="PGA", m_max=40, nu=0.3))
    selected, coeffs = reference_fits.pga(design.x_std, design.y, 40, 0.3)
    assert_array_equal(path.selected, selected)
    assert_allclose(path.coeffs, coeffs, atol=1e-10)


@pytest.mark.parametrize("seed", SEEDS)
def test_oga_matches_reference(seed):
    design, stats = _setup(seed)
    path = fit(stats, AlgoConfig(algorithm="OGA", m_max=8))
    selected, coeffs = reference_fits.oga(design.x_std, design.y, 8)
    assert_array_equal(path.selected, selected)
    assert_allclose(path.coeffs, coeffs, atol=1e-10)


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("literal", [False, True])
def test_rga_matches_reference(seed, literal):
    design, stats = _setup(seed)
    path = fit(stats, AlgoConfig(algorithm="RGA", m_max=30, literal_vectorized_rga=literal))
    selected, coeffs = reference_fits.rga(design.x_std, design.y, 30, literal=literal)
    assert_array_equal(path.selected, selected)
    assert_allclose(path.coeffs, coeffs, atol=1e-10)


@pytest.mark.parametrize("seed", SEEDS)
def test_cga_matches_reference(seed):
    design, stats = _setup(seed)
    path = fit(stats, AlgoConfig(algorithm="CGA", m_max=30, b_bar=1.5))
    selected, coeffs = reference_fits.cga(design.x_std, design.y, 30, 1.5)
    assert_array_equal(path.selected, selected)
    assert_allclose(path.coeffs, coeffs, atol=1e-10)


@pytest.mark.parametrize("seed", SEEDS)
def test_fwa_matches_reference(seed):
    design, stats = _setup(seed)
    path = fit(stats, AlgoConfig(algorithm="FWA", m_max=30, b_bar=1.5))
    selected, coeffs = reference_fits.fwa(design.x_std, design.y, 30, 1.5)
    assert_array_equal(path.selected, selected)
    assert_allclose(path.coeffs, coeffs, atol=1e-10)


# ---- path invariants ----

def test_rss_matches_direct_residuals(design, stats):
    for algo, extra in [("PGA", {}), ("OGA", {}), ("RGA", {}), ("CGA", {"b_bar": 2.0}), ("FWA", {"b_bar": 2.0})]:
        path = fit(stats, AlgoConfig(algorithm=algo, m_max=8, **extra))
        resid = design.y[:, None] - design.x_std @ path.coeffs.T
        assert_allclose(path.rss, np.mean(resid ** 2, axis=0), atol=1e-10)


def test_pga_rss_decrement_identity(stats):
    nu = 0.4
    path = fit(stats, AlgoConfig(algorithm="PGA", m_max=50, nu=nu))
    rss = np.concatenate([[stats.sy2], path.rss])
    assert_allclose(rss[:-1] - rss[1:], nu * (2.0 - nu) * path.max_corr ** 2, atol=1e-10)


def test_oga_residual_is_orthogonal_to_selected_columns(stats):
    path = fit(stats, AlgoConfig(algorithm="OGA", m_max=10))
    for j in range(1, len(path) + 1):
        b = path.coeffs[j - 1]
        sel = path.selected[:j]
        resid_corr = stats.c[sel] - stats.d[np.ix_(sel, np.arange(stats.K))] @ b
        assert_allclose(resid_corr, 0.0, atol=1e-9)
    assert len(set(path.selected.tolist())) == len(path)


def test_oga_excludes_columns_with_small_pivot():
    rng = np.random.default_rng(1)
    x0 = rng.standard_normal(200)
    x1 = x0 + 0.5 * rng.standard_normal(200)
    x = np.column_stack([x0, x1, rng.standard_normal((200, 2))])
    y = x0 + x1
    stats = suffstats_from(standardize(RawDesign(x, y)))
    # x0 and x1 share ~80% of their norm, so the second of them has pivot ~0.2
    path = fit_oga(stats, AlgoConfig(algorithm="OGA", m_max=4, proj_tol=0.5))
    assert len(path.excluded) == 1
    step, index = path.excluded[0]
    assert step == 2
    assert index in (0, 1)
    assert index not in path.selected.tolist()
    assert len(path) == 3
    assert path.converged_at == 3


def test_oga_exact_duplicate_is_never_selected_twice():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((30, 3))
    x = np.column_stack([x, x[:, 0]])
    y = x @ np.array([1.0, 0.5, -0.5, 1.0]) + 0.1 * rng.standard_normal(30)
    path = fit_oga(suffstats_from(standardize(RawDesign(x, y))), AlgoConfig(algorithm="OGA", m_max=4))
    chosen = set(path.selected.tolist())
    assert len(chosen) == len(path)
    assert not {0, 3} <= chosen
    assert len(path) == 3


@pytest.mark.parametrize("algo", ["CGA", "FWA"])
@pytest.mark.parametrize("weights", ["fixed", "line_search"])
def test_l1_budget_is_respected(stats, algo, weights):
    path = fit(stats, AlgoConfig(algorithm=algo, m_max=200, b_bar=0.7, weights=weights))
    assert np.all(path.l1 <= 0.7 + 1e-10)


@pytest.mark.parametrize("algo", ["CGA", "FWA"])
def test_simplex_variant_is_nonnegative(stats, algo):
    path = fit(stats, AlgoConfig(algorithm=algo, m_max=200, b_bar=1.0, simplex=True))
    assert np.all(path.coeffs >= 0.0)
    assert np.all(path.coeffs.sum(axis=1) <= 1.0 + 1e-10)


def test_simplex_cga_forces_unit_budget():
    assert AlgoConfig(algorithm="CGA", b_bar=5.0, simplex=True).b_bar == 1.0


@pytest.mark.parametrize("algo,extra", [
    ("RGA", {}),
    ("CGA", {"b_bar": 1.0}),
    ("FWA", {"b_bar": 1.0}),
])
def test_line_search_rss_never_increases(stats, algo, extra):
    path = fit(stats, AlgoConfig(algorithm=algo, m_max=100, weights="line_search", **extra))
    rss = np.concatenate([[stats.sy2], path.rss])
    assert np.all(np.diff(rss) <= 1e-12)
    assert np.all((path.weights >= 0.0) & (path.weights <= 1.0))


def test_rga_line_search_is_no_worse_than_the_fixed_second_step(stats):
    fixed = fit(stats, AlgoConfig(algorithm="RGA", m_max=2))
    searched = fit(stats, AlgoConfig(algorithm="RGA", m_max=2, weights="line_search"))
    # the first step is the same univariate fit under both rules
    assert searched.selected[0] == fixed.selected[0]
    assert searched.rss[0] == pytest.approx(fixed.rss[0])
    assert searched.rss[1] <= fixed.rss[1] + 1e-12


@pytest.mark.parametrize("algo,extra", [("PGA", {}), ("OGA", {}), ("RGA", {})])
def test_selection_is_equivariant_under_y_scaling(raw, algo, extra):
    base = fit(suffstats_from(standardize(raw)), AlgoConfig(algorithm=algo, m_max=10, **extra))
    scaled_raw = RawDesign(raw.x, 3.0 * raw.y)
    scaled = fit(suffstats_from(standardize(scaled_raw)), AlgoConfig(algorithm=algo, m_max=10, **extra))
    assert_array_equal(base.selected, scaled.selected)
    assert_allclose(scaled.coeffs, 3.0 * base.coeffs, rtol=1e-10, atol=1e-12)


def test_zero_response_stops_before_the_first_step():
    rng = np.random.default_rng(0)
    stats = suffstats_from(standardize(RawDesign(rng.standard_normal((10, 3)), np.zeros(10))))
    for algo, extra in [("PGA", {}), ("OGA", {}), ("RGA", {}), ("CGA", {"b_bar": 1.0}), ("FWA", {"b_bar": 1.0})]:
        path = fit(stats, AlgoConfig(algorithm=algo, m_max=5, **extra))
        assert len(path) == 0
        assert path.converged_at == 0


def test_first_oga_step_picks_the_most_correlated_column(design, stats):
    path = fit(stats, AlgoConfig(algorithm="OGA", m_max=1))
    corr = np.abs(design.x_std.T @ design.y)
    assert path.selected[0] == int(np.argmax(corr))


# ---- registry, prediction ----

def test_registry_covers_every_algorithm(stats):
    assert set(FITTER_REGISTRY) == set(Algorithm)
    assert get_fitter("oga") is FITTER_REGISTRY[Algorithm.OGA]
    assert get_fitter(" Fwa ") is FITTER_REGISTRY[Algorithm.FWA]
    assert get_fitter(Algorithm.CGA) is FITTER_REGISTRY[Algorithm.CGA]
    with pytest.raises(ConfigError):
        get_fitter("LARS")


def test_fitter_rejects_foreign_config(stats):
    with pytest.raises(ConfigError):
        FITTER_REGISTRY[Algorithm.PGA](stats, AlgoConfig(algorithm="OGA"))


def test_predict_uses_stored_scales(raw, design, stats):
    path = fit(stats, AlgoConfig(algorithm="OGA", m_max=4))
    assert_allclose(predict(path, 4, raw.x), design.x_std @ path.coeffs[3], atol=1e-12)
    assert_allclose(predict(path, 4, raw.x), raw.x @ coeffs_raw(path, 4), atol=1e-12)
    assert_allclose(predict(path, 0, raw.x), 0.0)
    with pytest.raises(DimensionMismatchError):
        predict(path, 1, raw.x[:, :3])


def test_predict_steps_clamps_past_the_path_end(raw, stats):
    path = fit(stats, AlgoConfig(algorithm="OGA", m_max=3))
    table = predict_steps(path, np.array([1, 3, 10]), raw.x)
    assert table.shape == (raw.n, 3)
    assert_allclose(table[:, 2], table[:, 1])


def test_coeffs_at_bounds(stats):
    path = fit(stats, AlgoConfig(algorithm="PGA", m_max=3))
    assert_allclose(path.coeffs_at(0), 0.0)
    with pytest.raises(ConfigError):
        path.coeffs_at(4)


def test_config_combinations_are_validated():
    with pytest.raises(ValidationError):
        AlgoConfig(algorithm="CGA")
    with pytest.raises(ValidationError):
        AlgoConfig(algorithm="OGA", weights=WeightRule.line_search)
    with pytest.raises(ValidationError):
        AlgoConfig(algorithm="PGA", simplex=True)
    with pytest.raises(ValidationError):
        AlgoConfig(algorithm="OGA", literal_vectorized_rga=True)
    with pytest.raises(ValidationError):
        AlgoConfig(algorithm="PGA", nu=1.5)


def test_suffstats_only_fit_has_no_scale():
    stats = SuffStats(c=np.array([0.5, 0.1]), d=np.eye(2), n=10, sy2=1.0)
    path = fit(stats, AlgoConfig(algorithm="OGA", m_max=2))
    assert path.scale is None
    assert_allclose(coeffs_raw(path, 2), [0.5, 0.1])


# ---- properties ----

@pytest.mark.parametrize("seed", range(10))
def test_oga_dominates_pga(seed):
    _, stats = _setup(seed)
    m = 8
    oga = fit(stats, AlgoConfig(algorithm="OGA", m_max=m))
    pga = fit(stats, AlgoConfig(algorithm="PGA", m_max=m, nu=0.5))
    assert oga.rss[0] <= pga.rss[0] + 1e-12
    for j in range(1, m + 1):
        pga_set = set(pga.selected[:j].tolist())
        if pga_set <= set(oga.selected[:j].tolist()):
            assert oga.rss[j - 1] <= pga.rss[j - 1] + 1e-12
        # least squares on the same columns is never worse than the PGA fit
        assert objective(stats, ols_dense(stats, sorted(pga_set))) <= pga.rss[j - 1] + 1e-12


@pytest.mark.parametrize("algo,extra", [
    ("PGA", {"nu": 0.3}),
    ("OGA", {}),
    ("RGA", {"weights": "line_search"}),
    ("CGA", {"b_bar": 1.2}),
    ("FWA", {"b_bar": 1.2, "weights": "line_search"}),
])
def test_fits_are_bit_identical_across_runs(algo, extra):
    _, stats = _setup(11, n=60, K=15)
    cfg = AlgoConfig(algorithm=algo, m_max=40, **extra)
    first, second = fit(stats, cfg), fit(stats, cfg)
    assert_array_equal(first.selected, second.selected)
    assert first.coeffs.tobytes() == second.coeffs.tobytes()
    assert first.rss.tobytes() == second.rss.tobytes()


def _identity_stats(K=4):
    c = np.zeros(K)
    c[0] = 2.0
    return SuffStats(c=c, d=np.eye(K), n=10, sy2=5.0)


@pytest.mark.parametrize("b_bar,expected", [(1.0, 1.0), (2.0, 2.0), (3.0, 2.0)])
def test_cga_on_the_identity_gram_reaches_the_constrained_optimum(b_bar, expected):
    path = fit(_identity_stats(), AlgoConfig(algorithm="CGA", m_max=500, b_bar=b_bar))
    assert path.coeffs[-1, 0] == pytest.approx(expected, abs=1e-12)
    assert_allclose(path.coeffs[-1, 1:], 0.0)


def test_fwa_first_step_lands_on_a_vertex():
    path = fit(_identity_stats(), AlgoConfig(algorithm="FWA", m_max=1, b_bar=1.0))
    assert path.weights[0] == 1.0
    assert_allclose(path.coeffs[0], [1.0, 0.0, 0.0, 0.0])


@pytest.mark.parametrize("algo", ["CGA", "FWA"])
def test_long_constrained_paths_keep_consistent_coefficients(stats, algo):
    cfg = AlgoConfig(algorithm=algo, m_max=20_000, b_bar=1.0)
    path = fit(stats, cfg)
    assert np.all(path.l1 <= 1.0 + 1e-10)
    # the recorded rss is the objective of the recorded coefficients
    for j in (0, 99, len(path) - 1):
        assert path.rss[j] == pytest.approx(objective(stats, path.coeffs[j]), abs=1e-12)
    short = fit(stats, cfg.model_copy(update={"m_max": 30}))
    assert_allclose(path.coeffs[:30], short.coeffs, atol=1e-14)
