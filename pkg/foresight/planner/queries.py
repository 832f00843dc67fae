from dataclasses import dataclass

from ..dims import ModelDims
from ..tensor import ParameterStore, Tensor

STATE_QUERIES = "planner.state_queries"
# 時刻を持たないモードクエリ (状態クエリを外した構成)
MODE_QUERIES = "planner.mode_queries"


@dataclass
class StateQueries:
    values: Tensor  # M × T_f × C, モードクエリなら M × 1 × C

    @property
    def modes(self) -> int:
        return self.values.shape[0]

    @property
    def steps(self) -> int:
        return self.values.shape[1]


def init_state_queries(store: ParameterStore, dims: ModelDims, time_indexed: bool = True):
    if time_indexed:
        store.normal(STATE_QUERIES, (dims.modes, dims.t_f, dims.channels), 1.0)
    else:
        store.normal(MODE_QUERIES, (dims.modes, 1, dims.channels), 1.0)


def state_queries(store: ParameterStore) -> StateQueries:
    if STATE_QUERIES in store:
        return StateQueries(values=store[STATE_QUERIES])
    return StateQueries(values=store[MODE_QUERIES])
