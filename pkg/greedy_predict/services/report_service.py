"""Report service: renders paths, criteria traces, CV results and simulation tables as files."""

import logging
import os
import platform
from dataclasses import asdict
from typing import Any, Dict, Optional, Sequence

import numpy as np
import orjson
import pandas as pd

import greedy_predict
from greedy_predict.connectors.csv_connector import write_frame
from greedy_predict.models.path import CvResult, GreedyPath, IcTrace, MonteCarloReport
from greedy_predict.services.greedy_fit import coeffs_raw

logger = logging.getLogger("greedy_predict")

REPORT_COLUMNS = (
    "case", "omega", "sigma2", "n", "algorithm", "mise_mean", "mise_sd",
    "reps", "failures", "chosen_tuning_mean", "reference_mise",
)


class ReportService:
    """Builds output DataFrames and writes them under an output directory."""

    def __init__(self, out_dir: str = "."):
        self.out_dir = out_dir

    def _target(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    # ---- fit ----
    @staticmethod
    def path_frame(path: GreedyPath, feature_names: Sequence[str]) -> pd.DataFrame:
        return pd.DataFrame({
            "m": np.arange(1, len(path) + 1),
            "selected_feature": [feature_names[k] for k in path.selected],
            "rss_n": path.rss,
            "weight": path.weights,
            "l1": path.l1,
        })

    @staticmethod
    def coefficients_frame(path: GreedyPath, at_step: int, feature_names: Sequence[str]) -> pd.DataFrame:
        return pd.DataFrame({
            "feature": list(feature_names),
            "coefficient_standardized": path.coeffs_at(at_step),
            "coefficient_raw": coeffs_raw(path, at_step),
        })

    @staticmethod
    def ic_frame(trace: IcTrace) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(r) for r in trace.records], columns=["m", "rss_n", "df", "aic", "aicc"])
        frame["chosen_aic"] = frame["m"] == trace.chosen_m_aic
        frame["chosen_aicc"] = frame["m"] == trace.chosen_m_aicc
        return frame

    # ---- cv ----
    @staticmethod
    def cv_frame(result: CvResult) -> pd.DataFrame:
        return pd.DataFrame({"candidate": result.candidates, "mean_validation_mse": result.mean_mse})

    # ---- table ----
    @staticmethod
    def report_frame(report: MonteCarloReport, record_timings: bool = False) -> pd.DataFrame:
        columns = list(REPORT_COLUMNS) + (["runtime_mean"] if record_timings else [])
        return report.frame.loc[:, columns]

    @staticmethod
    def render_table(report: MonteCarloReport) -> str:
        """Aligned text table: rows (case, omega, sigma2), columns n x algorithm, mean MISE."""
        frame = report.frame
        rows = list(dict.fromkeys(zip(frame["case"], frame["omega"], frame["sigma2"])))
        cols = list(dict.fromkeys(zip(frame["n"], frame["algorithm"])))
        pivot = frame.pivot_table(
            index=["case", "omega", "sigma2"],
            columns=["n", "algorithm"],
            values="mise_mean",
            aggfunc="first",
            dropna=False,
        )
        pivot = pivot.reindex(index=pd.MultiIndex.from_tuples(rows, names=pivot.index.names),
                              columns=pd.MultiIndex.from_tuples(cols, names=pivot.columns.names))
        title = f"MISE ({report.preset or 'custom grid'}, {report.reps} replications, seed {report.master_seed})"
        body = pivot.to_string(float_format=lambda v: f"{v:.2f}", na_rep="-")
        return f"{title}\n{body}\n"

    # ---- writers ----
    def write_csv(self, frame: pd.DataFrame, name: str) -> str:
        target = self._target(name)
        write_frame(frame, target)
        logger.info("Wrote %s (%d rows)", target, len(frame))
        return target

    def write_text(self, text: str, name: str) -> str:
        target = self._target(name)
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        logger.info("Wrote %s", target)
        return target

    def write_run_json(self, command: str, config: Dict[str, Any], extra: Optional[Dict[str, Any]] = None) -> str:
        """Effective configuration and library versions of a command run."""
        payload = {
            "command": command,
            "config": config,
            "versions": {
                "greedy_predict": greedy_predict.__version__,
                "numpy": np.__version__,
                "pandas": pd.__version__,
                "python": platform.python_version(),
            },
        }
        if extra:
            payload.update(extra)
        target = self._target("run.json")
        with open(target, "wb") as fh:
            fh.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY))
        return target
