import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
import numpy as np
import pandas as pd
from dataclasses_json import dataclass_json, Undefined

from ..checkpoint import Checkpoint
from ..dims import ModelDims
from ..errors import ContractError
from ..perception import observe
from ..planner import has_future_branch, plan, select_mode
from ..scenario_io import ScenarioSet
from ..world.expert import EpisodeTrace, rollout_future
from ..world.geometry import to_world
from ..world.scenario import ScenarioSpec
from ..world.state import Trajectory, initial_state
from ..worldmodel import DenoiseSchedule, WMKind, WorldModel
from .metrics import PDMSWeights, open_loop_metrics, pdms, score_scenario

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "scenario_id", "seed", "nc", "dac", "ttc", "comf", "ep", "pdms",
    "l2_1s", "l2_2s", "l2_3s", "col_1s", "col_2s", "col_3s", "error_flag",
]
METRIC_COLUMNS = REPORT_COLUMNS[2:-1]


class PlannerKind(Enum):
    MODEL = "model"
    EXPERT = "expert"


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass(frozen=True)
class EvalOptions:
    t_d: int = 100
    wm: WMKind = WMKind.ORACLE
    planner: PlannerKind = PlannerKind.MODEL
    seed: int = 0
    schedule: DenoiseSchedule = field(default_factory=DenoiseSchedule)
    weights: PDMSWeights = field(default_factory=PDMSWeights)
    workers: int = 1


@dataclass
class EvalReport:
    rows: pd.DataFrame
    summary: dict

    @property
    def valid(self) -> pd.DataFrame:
        return self.rows[self.rows["error_flag"] == 0]


def checkpoint_dims(checkpoint: Checkpoint | None) -> ModelDims:
    if checkpoint is None or "dims" not in checkpoint.config:
        return ModelDims()
    return ModelDims.schema().load(checkpoint.config["dims"])


def _evaluate_one(scenario_id: str, spec: ScenarioSpec, checkpoint: Checkpoint | None, options: EvalOptions, dims: ModelDims) -> dict:
    state = initial_state(spec)
    grids, gt, trace = rollout_future(spec, state, dims.t_wm, dims.t_f, dims.grid_size, dims.grid_size, dims.resolution)
    # 採点は計画ホライズン T_f ステップ分のエキスパート軌跡に対して行う
    trace = EpisodeTrace(states=trace.states[: dims.t_f + 1])

    if options.planner is PlannerKind.EXPERT:
        pred = gt
        executed = trace.world_trajectory()
    else:
        if checkpoint is None:
            raise ContractError("model planner needs a checkpoint")
        store = checkpoint.to_store()
        world_model = None
        if options.wm is not WMKind.NONE and has_future_branch(store):
            world_model = WorldModel(options.wm, store, options.schedule, dims.patch)
        obs = observe(state, dims.grid_size, dims.resolution, dims.n_rays)
        rng = np.random.default_rng([options.seed, spec.seed])
        output = plan(obs, world_model, options.t_d, store, dims, rng, rollout=grids, dt=spec.dt)
        pred = select_mode(output)
        executed = Trajectory(points=to_world(spec.ego_init, pred.points), dt=spec.dt)

    sub = score_scenario(executed, spec, trace)
    open_loop = open_loop_metrics(pred, gt, trace)
    return {
        "scenario_id": scenario_id,
        "seed": spec.seed,
        "nc": sub.nc,
        "dac": sub.dac,
        "ttc": sub.ttc,
        "comf": sub.comf,
        "ep": sub.ep,
        "pdms": pdms(sub, options.weights),
        "l2_1s": open_loop.l2[0],
        "l2_2s": open_loop.l2[1],
        "l2_3s": open_loop.l2[2],
        "col_1s": open_loop.collision[0],
        "col_2s": open_loop.collision[1],
        "col_3s": open_loop.collision[2],
        "error_flag": 0,
    }


def _evaluate_safe(args) -> dict:
    scenario_id, spec = args[0], args[1]
    try:
        return _evaluate_one(*args)
    except Exception as e:
        logger.warning("scenario %s failed during evaluation: %s", scenario_id, e)
        row = {column: np.nan for column in REPORT_COLUMNS}
        row.update(scenario_id=scenario_id, seed=spec.seed, error_flag=1)
        return row


def summarize(rows: pd.DataFrame, options: EvalOptions, scenarios: ScenarioSet) -> dict:
    valid = rows[rows["error_flag"] == 0]
    means = {c: (float(valid[c].mean()) if len(valid) else float("nan")) for c in METRIC_COLUMNS}
    return {
        "count": int(len(rows)),
        "errors": int((rows["error_flag"] != 0).sum()),
        "means": means,
        "l2_avg": float(np.mean([means["l2_1s"], means["l2_2s"], means["l2_3s"]])),
        "col_avg": float(np.mean([means["col_1s"], means["col_2s"], means["col_3s"]])),
        "weights": options.weights.to_dict(),
        "options": json.loads(options.to_json()),
        "seeds": {"eval": options.seed, "scenarios": [int(s.seed) for _, s in scenarios]},
        "scenario_hash": scenarios.hash,
    }


def run_eval(checkpoint: Checkpoint | None, scenarios: ScenarioSet, options: EvalOptions = EvalOptions()) -> EvalReport:
    """Plan once at t=0 per scenario, execute the selected trajectory non-reactively and score it.

    Rows are ordered by scenario id; failed scenarios are kept as flagged rows and left
    out of the means.
    """
    if len(scenarios) == 0:
        raise ContractError("evaluation needs a non-empty scenario set")
    dims = checkpoint_dims(checkpoint)
    tasks = [(scenario_id, spec, checkpoint, options, dims) for scenario_id, spec in scenarios]
    if options.workers > 1:
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            results = list(pool.map(_evaluate_safe, tasks))
    else:
        results = [_evaluate_safe(task) for task in tasks]

    rows = pd.DataFrame(results, columns=REPORT_COLUMNS).sort_values("scenario_id", kind="stable").reset_index(drop=True)
    rows["error_flag"] = rows["error_flag"].astype(int)
    return EvalReport(rows=rows, summary=summarize(rows, options, scenarios))
