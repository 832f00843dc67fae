import logging
from dataclasses import dataclass, replace
import numpy as np
import pandas as pd

from ..checkpoint import Checkpoint
from ..errors import ContractError
from ..planner import PlannerComponents
from ..scenario_io import ScenarioSet
from ..worldmodel import WMKind
from .runner import METRIC_COLUMNS, REPORT_COLUMNS, EvalOptions, EvalReport, run_eval

logger = logging.getLogger(__name__)

ABLATION_COLUMNS = ["label", "components", "t_d", "wm_kind", "scenarios", "errors", *METRIC_COLUMNS, "l2_avg", "scenario_hash"]
WM_KIND_LABELS = {"no_wm": WMKind.NONE, "simple_wm": WMKind.SIMPLE, "oracle_wm": WMKind.ORACLE}


@dataclass
class AblationReport:
    """One summary row per configuration plus the per-scenario rows behind it."""

    table: pd.DataFrame
    rows: pd.DataFrame
    scenario_hash: str
    seeds: list[int]

    @property
    def scenario_count(self) -> int:
        return int(self.table["scenarios"].iloc[0]) if len(self.table) else 0


# チェックポイントのパラメータ名から読んだ構成名 (チェックポイント無しはエキスパート)
def component_label(checkpoint: Checkpoint | None) -> str:
    if checkpoint is None:
        return "expert"
    return PlannerComponents.from_names(checkpoint.params).label()


def _summary_row(label: str, checkpoint: Checkpoint | None, options: EvalOptions, report: EvalReport) -> dict:
    means = report.summary["means"]
    return {
        "label": label,
        "components": component_label(checkpoint),
        "t_d": options.t_d,
        "wm_kind": options.wm.value,
        "scenarios": report.summary["count"],
        "errors": report.summary["errors"],
        **means,
        "l2_avg": report.summary["l2_avg"],
        "scenario_hash": report.summary["scenario_hash"],
    }


def _collect(runs: list[tuple[str, Checkpoint | None, EvalOptions]], scenarios: ScenarioSet) -> AblationReport:
    if not runs:
        raise ContractError("ablation needs at least one configuration")
    table, rows = [], []
    for label, checkpoint, options in runs:
        logger.info("ablation %s: t_d=%d wm=%s", label, options.t_d, options.wm.value)
        report = run_eval(checkpoint, scenarios, options)
        table.append(_summary_row(label, checkpoint, options, report))
        detail = report.rows.copy()
        detail.insert(0, "wm_kind", options.wm.value)
        detail.insert(0, "t_d", options.t_d)
        detail.insert(0, "label", label)
        rows.append(detail)
    return AblationReport(
        table=pd.DataFrame(table, columns=ABLATION_COLUMNS),
        rows=pd.concat(rows, ignore_index=True)[["label", "t_d", "wm_kind", *REPORT_COLUMNS]],
        scenario_hash=scenarios.hash,
        seeds=[int(spec.seed) for _, spec in scenarios],
    )


# 1 つのチェックポイントを各デノイズ段数で評価する (シナリオとノイズの seed は共通)
def ablate_denoising(checkpoint: Checkpoint, steps: list[int], scenarios: ScenarioSet, options: EvalOptions = EvalOptions()) -> AblationReport:
    if not steps:
        raise ContractError("denoising ablation needs at least one step")
    return _collect([(f"t_d={t}", checkpoint, replace(options, t_d=int(t))) for t in steps], scenarios)


def ablate_components(checkpoints: dict[str, Checkpoint], scenarios: ScenarioSet, options: EvalOptions = EvalOptions()) -> AblationReport:
    """Evaluate labelled checkpoints (e.g. baseline, wm_vanilla, wm_qformer) on one scenario set.

    Each row also names the component layout read back from the checkpoint, so variants
    trained with parts switched off are told apart without extra flags.
    """
    return _collect([(label, ckpt, options) for label, ckpt in checkpoints.items()], scenarios)


# WM なし / 簡易 WM / オラクル WM の順で並べる
def ablate_wm_kind(checkpoints: dict[str, Checkpoint], scenarios: ScenarioSet, options: EvalOptions = EvalOptions()) -> AblationReport:
    missing = [label for label in WM_KIND_LABELS if label not in checkpoints]
    if missing:
        raise ContractError(f"world-model ablation is missing checkpoints for {missing}")
    runs = [(label, checkpoints[label], replace(options, wm=kind)) for label, kind in WM_KIND_LABELS.items()]
    return _collect(runs, scenarios)


def majority(values: list[bool]) -> bool:
    return int(np.sum(values)) * 2 > len(values)
