import hashlib
import json
import os
from dataclasses import dataclass, field

from ..errors import MissingInputError, ScenarioError
from ..world.scenario import SCENARIO_FORMAT_VERSION, ScenarioSpec
from .exporter import dumps
from .loader import load

MANIFEST = "manifest.json"


def scenario_filename(scenario_id: str) -> str:
    return f"scenario_{scenario_id}.json"


@dataclass
class ScenarioSet:
    """Scenarios keyed by id; iteration and hashing always follow id order."""

    ids: list[str] = field(default_factory=list)
    specs: list[ScenarioSpec] = field(default_factory=list)

    def __post_init__(self):
        if len(self.ids) != len(self.specs):
            raise ScenarioError(f"{len(self.ids)} ids for {len(self.specs)} scenarios")
        order = sorted(range(len(self.ids)), key=lambda i: self.ids[i])
        self.ids = [self.ids[i] for i in order]
        self.specs = [self.specs[i] for i in order]

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self):
        return iter(zip(self.ids, self.specs))

    @property
    def hash(self) -> str:
        digest = hashlib.sha256()
        for scenario_id, spec in self:
            digest.update(scenario_id.encode("utf-8"))
            digest.update(dumps(spec).encode("utf-8"))
        return digest.hexdigest()

    def manifest(self) -> dict:
        return {
            "format_version": SCENARIO_FORMAT_VERSION,
            "count": len(self),
            "hash": self.hash,
            "scenarios": [
                {"id": i, "kind": s.kind.value, "seed": s.seed, "file": scenario_filename(i)}
                for i, s in self
            ],
        }


def export_dir(path: str, scenarios: ScenarioSet):
    os.makedirs(path, exist_ok=True)
    for scenario_id, spec in scenarios:
        with open(os.path.join(path, scenario_filename(scenario_id)), "w", encoding="utf-8") as f:
            f.write(dumps(spec))
    with open(os.path.join(path, MANIFEST), "w", encoding="utf-8") as f:
        json.dump(scenarios.manifest(), f, indent=2, sort_keys=True)
        f.write("\n")


# manifest.json の並び (無ければ scenario_*.json 全部) を読む
def load_dir(path: str) -> ScenarioSet:
    if not os.path.isdir(path):
        raise MissingInputError(f"scenario directory not found: {path}")
    manifest_path = os.path.join(path, MANIFEST)
    if os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as f:
            entries = [(e["id"], e["file"]) for e in json.load(f)["scenarios"]]
    else:
        names = sorted(n for n in os.listdir(path) if n.startswith("scenario_") and n.endswith(".json"))
        entries = [(n[len("scenario_") : -len(".json")], n) for n in names]

    ids, specs = [], []
    for scenario_id, name in entries:
        file_path = os.path.join(path, name)
        if not os.path.exists(file_path):
            raise MissingInputError(f"scenario file listed in manifest is missing: {file_path}")
        with open(file_path, encoding="utf-8") as f:
            specs.append(load(f))
        ids.append(scenario_id)
    return ScenarioSet(ids=ids, specs=specs)
