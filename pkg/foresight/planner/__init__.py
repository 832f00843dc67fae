from .queries import MODE_QUERIES, STATE_QUERIES, StateQueries, init_state_queries, state_queries
from .qformer import CompressedFuture, future_time_embed, init_qformer, init_vanilla, wm_qformer, wm_vanilla
from .decode import factorized_decode, init_stage1, init_stage2
from .head import OFFSET_SCALE, PlanOutput, decode_trajectories, select_mode
from .components import PlannerComponents
from .pipeline import attach_future_branch, components, compress_future, forward, has_future_branch, init_planner, plan
