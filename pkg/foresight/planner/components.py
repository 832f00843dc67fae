from dataclasses import dataclass
from typing import Iterable
from dataclasses_json import dataclass_json, Undefined

from ..perception.encoder import PATCH_EMBED
from .decode import STAGE2
from .qformer import QFORMER, VANILLA
from .queries import MODE_QUERIES


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass(frozen=True)
class PlannerComponents:
    current_encoder: bool = True
    state_queries: bool = True
    world_model: bool = False
    qformer: bool = True
    factorized: bool = True

    # パラメータ名から構成を読み戻す (チェックポイントに旗は持たせない)
    @classmethod
    def from_names(cls, names: Iterable[str]) -> "PlannerComponents":
        names = list(names)

        def has(prefix: str) -> bool:
            return any(n == prefix or n.startswith(prefix + ".") for n in names)

        branch = has(QFORMER) or has(VANILLA)
        return cls(
            current_encoder=has(PATCH_EMBED),
            state_queries=not has(MODE_QUERIES),
            world_model=branch,
            qformer=has(QFORMER) if branch else True,
            factorized=has(STAGE2) if branch else True,
        )

    def label(self) -> str:
        parts = []
        if self.current_encoder:
            parts.append("current")
        if self.state_queries:
            parts.append("state_queries")
        if self.world_model:
            parts.append("wm")
            parts.append("qformer" if self.qformer else "vanilla")
            parts.append("factorized" if self.factorized else "joint")
        return "+".join(parts) or "ego_only"
