import pytest
from pydantic import ValidationError

from greedy_predict.core.exceptions import (
    ConfigError,
    DegenerateColumnError,
    MalformedInputError,
    SingularError,
    TableFailureError,
    config_error,
    exit_code_for,
)
from greedy_predict.schemas.schemas import (
    AlgoConfig,
    Algorithm,
    CvPlan,
    DgpSpec,
    RunConfig,
    ThetaCase,
    WeightRule,
    documented_keys,
)


def test_run_config_parses_flag_strings():
    cfg = RunConfig(
        algorithm="cga",
        b_bar="2.5",
        weights="line_search",
        simplex="true",
        algorithms="oga, fwa",
        cv_grid="1:4",
        case="longmemory",
        criterion="aic",
    )
    assert cfg.algorithm == Algorithm.CGA
    assert cfg.b_bar == 2.5
    assert cfg.simplex is True
    assert cfg.algorithms == [Algorithm.OGA, Algorithm.FWA]
    assert cfg.cv_grid == [1.0, 2.0, 3.0, 4.0]
    assert cfg.case == ThetaCase.LongMemory
    assert RunConfig(cv_grid="0.5, 2").cv_grid == [0.5, 2.0]


def test_run_config_rejects_unknown_and_invalid_values():
    with pytest.raises(ValidationError):
        RunConfig(bogus=1)
    with pytest.raises(ValidationError):
        RunConfig(preset="table7")
    with pytest.raises(ValidationError):
        RunConfig(coefficients_at="middle")
    with pytest.raises(ValidationError):
        RunConfig(nu=0.0)


def test_algo_config_drops_settings_the_algorithm_does_not_use():
    cfg = RunConfig(algorithm="CGA", b_bar=1.0, weights="line_search", simplex=True, m_max=7)
    oga = cfg.algo_config(Algorithm.OGA)
    assert oga.weights == WeightRule.fixed
    assert oga.simplex is False
    assert oga.m_max == 7
    cga = cfg.algo_config()
    assert cga.simplex and cga.weights == WeightRule.line_search
    assert cfg.algo_config(m_max=3).m_max == 3


def test_algo_config_is_frozen():
    cfg = AlgoConfig(algorithm="PGA")
    with pytest.raises(ValidationError):
        cfg.m_max = 5
    assert cfg.model_copy(update={"m_max": 5}).m_max == 5


def test_cv_plan_and_dgp_spec_validation():
    with pytest.raises(ValidationError):
        CvPlan(grid=())
    with pytest.raises(ValidationError):
        CvPlan(grid=(0.0, 1.0))
    with pytest.raises(ValidationError):
        CvPlan(folds=1, grid=(1.0,))
    with pytest.raises(ValidationError):
        DgpSpec(omega=1.0)
    with pytest.raises(ValidationError):
        DgpSpec(K=3, coeff_scheme="Custom", custom_coeffs=(1.0,))


def test_documented_keys_cover_every_field():
    keys = documented_keys()
    assert [k for k, _ in keys] == list(RunConfig.model_fields)
    assert all(description for _, description in keys)


def test_exit_codes():
    assert exit_code_for(ConfigError("x")) == 2
    assert exit_code_for(MalformedInputError("x", line=4)) == 2
    assert exit_code_for(DegenerateColumnError(0)) == 3
    assert exit_code_for(TableFailureError("x")) == 4
    assert exit_code_for(SingularError("x")) == 1
    assert exit_code_for(RuntimeError("x")) == 1
    try:
        RunConfig(m_max=0)
    except ValidationError as e:
        assert exit_code_for(e) == 2
        converted = config_error(e)
        assert isinstance(converted, ConfigError)
        assert "m_max" in converted.message
