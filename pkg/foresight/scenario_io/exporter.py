import json

from ..world.scenario import SCENARIO_FORMAT_VERSION, ScenarioSpec


def dumps(spec: ScenarioSpec) -> str:
    data = json.loads(spec.to_json())
    data["format_version"] = SCENARIO_FORMAT_VERSION
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def export(path: str, spec: ScenarioSpec):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(spec))
