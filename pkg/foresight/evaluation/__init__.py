from .metrics import (
    OPEN_LOOP_HORIZONS, OpenLoopMetrics, PDMSWeights, SubScores, comfort_profile, horizon_index,
    open_loop_metrics, pdms, score_scenario,
)
from .runner import METRIC_COLUMNS, REPORT_COLUMNS, EvalOptions, EvalReport, PlannerKind, run_eval
from .ablation import (
    ABLATION_COLUMNS, AblationReport, ablate_components, ablate_denoising, ablate_wm_kind, component_label, majority,
)
