"""Greedy prediction CLI tool (greedyctl)."""

import logging
from typing import Any, Dict, List, Optional

import typer
from dotenv import dotenv_values
from pydantic import ValidationError

from greedy_predict.connectors.csv_connector import read_design
from greedy_predict.core.config import settings
from greedy_predict.core.exceptions import (
    AiccUndefinedError,
    ConfigError,
    GreedyPredictError,
    TableFailureError,
    config_error,
    exit_code_for,
)
from greedy_predict.models.path import MonteCarloReport
from greedy_predict.schemas.schemas import (
    Algorithm,
    CvPlan,
    DgpSpec,
    RunConfig,
    documented_keys,
)
from greedy_predict.services.design_matrix import standardize, suffstats_from
from greedy_predict.services.greedy_fit import fit
from greedy_predict.services.model_select import cross_validate, select_m_by_ic
from greedy_predict.services.report_service import ReportService
from greedy_predict.services.sim_bench import (
    TABLE_CV_SCHEME,
    TABLE_FOLDS,
    default_algo_config,
    default_grid,
    preset_specs,
    run_table,
)

logger = logging.getLogger("greedy_predict")

_EXTRA_ARGS = {"allow_extra_args": True, "ignore_unknown_options": True}


def _keys_epilog() -> str:
    defaults = RunConfig()
    entries = []
    for name, description in documented_keys():
        value = getattr(defaults, name)
        if isinstance(value, list):
            value = ",".join(getattr(v, "value", str(v)) for v in value)
        else:
            value = getattr(value, "value", value)
        entries.append(f"{name}={value} ({description})")
    return "Configuration keys, given as --key=value or key=value lines in --config FILE: " + "; ".join(entries)


app = typer.Typer(name="greedyctl", help="Greedy algorithms for high-dimensional prediction", no_args_is_help=True)


@app.callback()
def main(
    ctx: typer.Context,
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Logging level (default from GREEDY_PREDICT_LOG_LEVEL)"),
    config: Optional[str] = typer.Option(None, "--config", help="key=value run-configuration file"),
):
    """Fit greedy models, cross-validate and reproduce simulation tables."""
    level = log_level or ("DEBUG" if settings.DEBUG else settings.LOG_LEVEL)
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        force=True,
    )
    ctx.obj = {"config_file": config}


def _parse_flags(args: List[str]) -> Dict[str, str]:
    """--key=value / --key value / bare --flag (true) tokens to a dict."""
    values: Dict[str, str] = {}
    i = 0
    while i < len(args):
        token = args[i]
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument '{token}'")
        body = token[2:]
        if "=" in body:
            key, value = body.split("=", 1)
        elif i + 1 < len(args) and not args[i + 1].startswith("--"):
            key, value = body, args[i + 1]
            i += 1
        else:
            key, value = body, "true"
        values[key.replace("-", "_")] = value
        i += 1
    return values


def load_run_config(ctx: typer.Context) -> RunConfig:
    """File values overridden by command-line flags; unknown keys are errors."""
    merged: Dict[str, Any] = {}
    config_file = (ctx.obj or {}).get("config_file")
    if config_file:
        file_values = dotenv_values(config_file)
        if not file_values:
            logger.warning("Config file %s is empty or unreadable", config_file)
        merged.update({k: v for k, v in file_values.items() if v is not None})
    merged.update(_parse_flags(list(ctx.args)))
    known = set(RunConfig.model_fields)
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    try:
        return RunConfig(**merged)
    except ValidationError as e:
        raise config_error(e)


def _fail(exc: BaseException) -> None:
    code = exit_code_for(exc)
    if isinstance(exc, ValidationError):
        exc = config_error(exc)
    message = exc.message if isinstance(exc, GreedyPredictError) else str(exc)
    typer.echo(f"error: {message}", err=True)
    raise typer.Exit(code=code)


def _config_dump(cfg: RunConfig) -> Dict[str, Any]:
    return cfg.model_dump(mode="json")


@app.command("fit", context_settings=_EXTRA_ARGS, epilog=_keys_epilog())
def cmd_fit(
    ctx: typer.Context,
    data: str = typer.Argument(..., help="CSV file with a header row"),
):
    """Fit a greedy path; write coefficients.csv, path.csv, ic.csv and run.json."""
    try:
        cfg = load_run_config(ctx)
        raw = read_design(data, cfg.target)
        design = standardize(raw, center=cfg.center)
        path = fit(suffstats_from(design), cfg.algo_config())
        trace = None
        if len(path):
            trace = select_m_by_ic(path, design, cfg.criterion, cfg.df_method, cfg.gdf_reps, cfg.seed)
        at_step = len(path)
        if cfg.coefficients_at == "criterion":
            if trace is None or trace.chosen_m is None:
                raise AiccUndefinedError(f"{cfg.criterion.value} is undefined on every step")
            at_step = trace.chosen_m

        reports = ReportService(cfg.out_dir)
        names = raw.feature_names
        reports.write_csv(reports.coefficients_frame(path, at_step, names), "coefficients.csv")
        reports.write_csv(reports.path_frame(path, names), "path.csv")
        if trace is not None:
            reports.write_csv(reports.ic_frame(trace), "ic.csv")
        else:
            reports.write_text("m,rss_n,df,aic,aicc,chosen_aic,chosen_aicc\n", "ic.csv")
        reports.write_run_json("fit", _config_dump(cfg), {
            "data": data,
            "steps": len(path),
            "converged_at": path.converged_at,
            "coefficients_at_step": at_step,
            "excluded": [list(e) for e in path.excluded],
        })
    except (GreedyPredictError, ValidationError) as e:
        _fail(e)

    typer.echo(f"{cfg.algorithm.value}: {len(path)} steps, coefficients at step {at_step}")
    if trace is not None:
        typer.echo(f"AIC chooses m={trace.chosen_m_aic}, AICC chooses m={trace.chosen_m_aicc}")


@app.command("cv", context_settings=_EXTRA_ARGS, epilog=_keys_epilog())
def cmd_cv(
    ctx: typer.Context,
    data: str = typer.Argument(..., help="CSV file with a header row"),
):
    """Cross-validate m (PGA/OGA/RGA) or b_bar (CGA/FWA); write cv.csv and print the choice."""
    try:
        cfg = load_run_config(ctx)
        raw = read_design(data, cfg.target)
        budget = cfg.algorithm in (Algorithm.CGA, Algorithm.FWA)
        if cfg.cv_grid:
            grid = tuple(cfg.cv_grid)
        elif budget:
            grid = default_grid(cfg.algorithm, raw.K)
        else:
            grid = tuple(float(m) for m in range(1, cfg.m_max + 1))
        overrides = {"b_bar": cfg.b_bar or grid[0]} if budget else {}
        plan = CvPlan(folds=cfg.folds, scheme=cfg.cv_scheme, grid=grid, seed=cfg.seed)
        result = cross_validate(raw, cfg.algo_config(**overrides), plan, center=cfg.center)

        reports = ReportService(cfg.out_dir)
        reports.write_csv(reports.cv_frame(result), "cv.csv")
        reports.write_run_json("cv", _config_dump(cfg), {"data": data, "chosen": result.chosen})
    except (GreedyPredictError, ValidationError) as e:
        _fail(e)

    typer.echo(f"{result.chosen:g}")


def _table_specs(cfg: RunConfig) -> List[DgpSpec]:
    if cfg.preset:
        return preset_specs(cfg.preset, K=cfg.K)
    return [DgpSpec(
        n=cfg.n,
        K=cfg.K,
        theta_case=cfg.case,
        epsilon=cfg.epsilon,
        omega=cfg.omega,
        sigma2=cfg.sigma2,
        coeff_scheme=cfg.coeff_scheme,
        seed=cfg.seed,
    )]


def _table_configs(cfg: RunConfig):
    configs = []
    for algo in cfg.algorithms:
        base = default_algo_config(algo)
        overrides = {"m_max": cfg.m_max if "m_max" in cfg.model_fields_set else base.m_max}
        if algo in (Algorithm.CGA, Algorithm.FWA):
            overrides["b_bar"] = cfg.b_bar or base.b_bar
        configs.append(cfg.algo_config(algo, **overrides))
    return configs


@app.command("table", context_settings=_EXTRA_ARGS, epilog=_keys_epilog())
def cmd_table(ctx: typer.Context):
    """Run the Monte Carlo study; write report.csv, table.txt and run.json."""
    report: Optional[MonteCarloReport] = None
    try:
        cfg = load_run_config(ctx)
        folds = cfg.folds if "folds" in cfg.model_fields_set else TABLE_FOLDS
        cv_scheme = cfg.cv_scheme if "cv_scheme" in cfg.model_fields_set else TABLE_CV_SCHEME
        cv = None
        if cfg.cv_grid:
            cv = CvPlan(folds=folds, scheme=cv_scheme, grid=tuple(cfg.cv_grid), seed=cfg.seed)
        report = run_table(
            _table_specs(cfg),
            algorithms=cfg.algorithms,
            reps=cfg.reps,
            cv=cv,
            n_eval=cfg.n_eval,
            master_seed=cfg.seed,
            configs=_table_configs(cfg),
            tune=cfg.tune,
            threads=cfg.threads,
            preset=cfg.preset,
            folds=folds,
            cv_scheme=cv_scheme,
            refit=cfg.refit,
        )
        reports = ReportService(cfg.out_dir)
        reports.write_csv(reports.report_frame(report, cfg.record_timings), "report.csv")
        text = reports.render_table(report)
        reports.write_text(text, "table.txt")
        reports.write_run_json("table", _config_dump(cfg), {"errors": list(report.errors)})
        typer.echo(text)

        failing = report.failing_cells(settings.MAX_FAILURE_FRACTION)
        if not failing.empty:
            raise TableFailureError(
                f"{len(failing)} cell(s) exceed the failure budget of "
                f"{settings.MAX_FAILURE_FRACTION:.0%} of {cfg.reps} replications"
            )
    except (GreedyPredictError, ValidationError) as e:
        _fail(e)


@app.command("keys")
def cmd_keys():
    """List every configuration key with its description."""
    for name, description in documented_keys():
        typer.echo(f"{name}\t{description}")


if __name__ == "__main__":
    app()
