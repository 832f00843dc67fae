import json
from typing import TextIO

from marshmallow import ValidationError

from ..errors import ScenarioError
from ..world.scenario import SCENARIO_FORMAT_VERSION, ScenarioSpec


def loads(text: str) -> ScenarioSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must hold a JSON object")

    version = data.pop("format_version", None)
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioError(f"unsupported scenario format_version {version!r} (expected {SCENARIO_FORMAT_VERSION})")
    try:
        spec = ScenarioSpec.schema().load(data)
    except ValidationError as e:
        raise ScenarioError(f"malformed scenario: {e.messages}") from e
    if spec.dt <= 0 or spec.horizon_steps < 1:
        raise ScenarioError(f"scenario {spec.seed} has dt={spec.dt}, horizon_steps={spec.horizon_steps}")
    return spec


def load(fp: TextIO) -> ScenarioSpec:
    return loads(fp.read())
