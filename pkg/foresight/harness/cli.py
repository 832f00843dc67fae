import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
from marshmallow import ValidationError

from .. import __version__, checkpoint as ckpt_io
from ..errors import ContractError, DivergenceError, MissingInputError, UsageError
from ..evaluation import EvalOptions, PlannerKind, ablate_components, ablate_denoising, ablate_wm_kind, run_eval
from ..scenario_io import ScenarioSet, export_dir, load_dir
from ..training import build_samples, load_train_config, train_phase1, train_phase2
from ..world.generator import generate_scenario
from ..world.scenario import ScenarioKind
from ..worldmodel import DenoiseSchedule, ScheduleShape, WMKind
from .run_config import RunConfig, resolve_seed, write_echo

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64
EXIT_NOINPUT = 66


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _step(message: str):
    print(message, end="", flush=True)


def _ok():
    print(" \033[32mOK\033[0m", flush=True)


def _path(args, path: str | None) -> str | None:
    if path is None:
        return None
    return os.path.abspath(os.path.join(args.workdir, path))


def _require(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise MissingInputError(f"{what} not found: {path}")
    return path


def _parse_kinds(text: str) -> list[ScenarioKind]:
    try:
        return [ScenarioKind(k.strip()) for k in text.split(",") if k.strip()]
    except ValueError as e:
        raise UsageError(f"invalid scenario kind in {text!r}; choose from {[k.value for k in ScenarioKind]}") from e


def _parse_steps(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise UsageError(f"invalid --steps list {text!r}") from e


def _parse_labelled(text: str) -> dict[str, str]:
    pairs = {}
    for item in text.split(","):
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise UsageError(f"--ckpts expects label=path pairs, got {item!r}")
        pairs[label.strip()] = path.strip()
    return pairs


def scenario_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _generate(args) -> tuple[str, object]:
    index, seed, kind = args
    return f"{index:05d}", generate_scenario(scenario_seed(seed, index), kind)


# kinds を指定順に巡回して count 本作る
def generate_set(count: int, seed: int, kinds: list[ScenarioKind], workers: int = 1) -> ScenarioSet:
    tasks = [(i, seed, kinds[i % len(kinds)]) for i in range(count)]
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_generate, tasks))
    else:
        results = [_generate(task) for task in tasks]
    return ScenarioSet(ids=[r[0] for r in results], specs=[r[1] for r in results])


def cmd_gen_scenarios(args) -> int:
    if args.count < 0:
        raise UsageError(f"--count must be non-negative, got {args.count}")
    seed = resolve_seed(args.seed)
    kinds = _parse_kinds(args.kinds)
    if not kinds:
        raise UsageError("--kinds is empty")
    out = _path(args, args.out)

    _step(f"シナリオを {args.count} 件生成しています...")
    scenarios = generate_set(args.count, seed, kinds, args.workers)
    _ok()
    _step("シナリオファイルを出力しています...")
    try:
        export_dir(out, scenarios)
    except OSError as e:
        raise UsageError(f"cannot write scenarios to {out}: {e}") from e
    write_echo(os.path.join(out, "manifest.json"), RunConfig(
        command="gen-scenarios", workdir=os.path.abspath(args.workdir), seed=seed,
        arguments={"out": out, "count": args.count, "kinds": [k.value for k in kinds], "workers": args.workers},
    ))
    _ok()
    print("保存先：", out)
    return EXIT_OK


def _training_scenarios(args, config) -> ScenarioSet:
    directory = args.scenarios or config.scenarios
    if directory is not None:
        return load_dir(_require(_path(args, directory), "scenario directory"))
    return generate_set(config.train_count, config.seed, list(config.kinds), args.workers)


def cmd_train(args) -> int:
    if args.phase == 2 and args.init is None:
        raise UsageError("phase 2 needs --init with a phase-1 checkpoint")
    config_path = _require(_path(args, args.config), "config file")
    with open(config_path, encoding="utf-8") as f:
        config = load_train_config(json.load(f))
    config = replace(config, seed=resolve_seed(args.seed, config.seed))
    out = _path(args, args.out)
    stem, _ = os.path.splitext(out)

    _step("学習データを準備しています...")
    scenarios = _training_scenarios(args, config)
    samples = build_samples([spec for _, spec in scenarios], config.dims, args.workers)
    _ok()

    init = None
    if args.phase == 2:
        init = ckpt_io.load(_require(_path(args, args.init), "phase-1 checkpoint"))

    _step(f"フェーズ{args.phase}の学習を実行しています...")
    try:
        result = train_phase1(config, samples) if args.phase == 1 else train_phase2(config, init, samples)
    except DivergenceError as e:
        if e.last_good is not None:
            ckpt_io.export(f"{stem}.last_good.ckpt", e.last_good)
        raise
    _ok()

    _step("チェックポイントを出力しています...")
    ckpt_io.export(out, result.checkpoint)
    result.log.to_csv(f"{stem}.log.csv", index=False)
    write_echo(out, RunConfig(
        command="train", workdir=os.path.abspath(args.workdir), seed=config.seed,
        arguments={"config": config_path, "phase": args.phase, "init": _path(args, args.init), "out": out,
                   "scenarios": _path(args, args.scenarios), "scenario_hash": scenarios.hash},
        train=config.echo(),
    ))
    _ok()
    print("保存先：", out)
    return EXIT_OK


def _eval_options(args, seed: int) -> EvalOptions:
    return EvalOptions(
        t_d=args.t_d,
        wm=WMKind(args.wm),
        planner=PlannerKind(args.planner),
        seed=seed,
        schedule=DenoiseSchedule(shape=ScheduleShape(args.schedule)),
        workers=args.workers,
    )


def _load_checkpoint(args, path: str | None):
    if path is None:
        return None
    return ckpt_io.load(_require(_path(args, path), "checkpoint"))


def cmd_eval(args) -> int:
    seed = resolve_seed(args.seed)
    options = _eval_options(args, seed)
    if options.planner is PlannerKind.MODEL and args.ckpt is None:
        raise UsageError("eval with the model planner needs --ckpt")
    checkpoint = _load_checkpoint(args, args.ckpt)
    scenarios = load_dir(_require(_path(args, args.scenarios), "scenario directory"))
    out = _path(args, args.out)
    stem, _ = os.path.splitext(out)

    _step(f"{len(scenarios)} 件のシナリオを評価しています...")
    report = run_eval(checkpoint, scenarios, options)
    _ok()
    _step("評価結果を出力しています...")
    report.rows.to_csv(out, index=False)
    with open(f"{stem}.summary.json", "w", encoding="utf-8") as f:
        json.dump(report.summary, f, indent=2, sort_keys=True)
        f.write("\n")
    write_echo(out, RunConfig(
        command="eval", workdir=os.path.abspath(args.workdir), seed=seed,
        arguments={"ckpt": _path(args, args.ckpt), "scenarios": _path(args, args.scenarios), "out": out},
        eval=json.loads(options.to_json()),
    ))
    _ok()
    print("PDMS:", f"{report.summary['means']['pdms']:.4f}", f"(エラー {report.summary['errors']} 件)")
    return EXIT_OK


def cmd_ablate(args) -> int:
    seed = resolve_seed(args.seed)
    options = _eval_options(args, seed)
    scenarios = load_dir(_require(_path(args, args.scenarios), "scenario directory"))
    out = _path(args, args.out)
    stem, _ = os.path.splitext(out)

    _step("アブレーションを実行しています...")
    if args.mode == "steps":
        if args.ckpt is None:
            raise UsageError("--mode steps needs --ckpt")
        report = ablate_denoising(_load_checkpoint(args, args.ckpt), _parse_steps(args.steps), scenarios, options)
    else:
        if args.ckpts is None:
            raise UsageError(f"--mode {args.mode} needs --ckpts label=path,...")
        checkpoints = {label: _load_checkpoint(args, path) for label, path in _parse_labelled(args.ckpts).items()}
        if args.mode == "wm":
            report = ablate_wm_kind(checkpoints, scenarios, options)
        else:
            report = ablate_components(checkpoints, scenarios, options)
    _ok()

    _step("アブレーション結果を出力しています...")
    report.table.to_csv(out, index=False)
    report.rows.to_csv(f"{stem}.rows.csv", index=False)
    write_echo(out, RunConfig(
        command="ablate", workdir=os.path.abspath(args.workdir), seed=seed,
        arguments={"mode": args.mode, "ckpt": _path(args, args.ckpt), "ckpts": args.ckpts, "steps": args.steps,
                   "scenarios": _path(args, args.scenarios), "out": out, "scenario_hash": report.scenario_hash},
        eval=json.loads(options.to_json()),
    ))
    _ok()
    print("保存先：", out)
    return EXIT_OK


def _add_eval_flags(parser):
    parser.add_argument("--scenarios", required=True)
    parser.add_argument("--t-d", dest="t_d", type=int, default=100)
    parser.add_argument("--wm", choices=[k.value for k in WMKind], default="oracle")
    parser.add_argument("--planner", choices=[k.value for k in PlannerKind], default="model")
    parser.add_argument("--schedule", choices=[s.value for s in ScheduleShape], default="linear")
    parser.add_argument("--out", required=True)


def _common() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--workdir", default=".")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foresight", description="World-model-centric anticipatory planning in a 2D microworld")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common()]

    gen = sub.add_parser("gen-scenarios", parents=common)
    gen.add_argument("--out", required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--kinds", default=",".join(k.value for k in ScenarioKind))
    gen.set_defaults(handler=cmd_gen_scenarios)

    train = sub.add_parser("train", parents=common)
    train.add_argument("--config", required=True)
    train.add_argument("--phase", type=int, choices=[1, 2], required=True)
    train.add_argument("--init", default=None)
    train.add_argument("--out", required=True)
    train.add_argument("--scenarios", default=None)
    train.set_defaults(handler=cmd_train)

    ev = sub.add_parser("eval", parents=common)
    ev.add_argument("--ckpt", default=None)
    _add_eval_flags(ev)
    ev.set_defaults(handler=cmd_eval)

    ablate = sub.add_parser("ablate", parents=common)
    ablate.add_argument("--mode", choices=["steps", "wm", "components"], required=True)
    ablate.add_argument("--ckpt", default=None)
    ablate.add_argument("--ckpts", default=None)
    ablate.add_argument("--steps", default="25,50,75,100")
    _add_eval_flags(ablate)
    ablate.set_defaults(handler=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return args.handler(args)
    except DivergenceError as e:
        print(f"\n数値エラーが発生しました (step {e.step})：", e, file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValidationError, ContractError) as e:
        print("\n引数または設定が不正です：", e, file=sys.stderr)
        return EXIT_USAGE
    except (MissingInputError, FileNotFoundError) as e:
        print("\n入力ファイルが見つかりません：", e, file=sys.stderr)
        return EXIT_NOINPUT
    except Exception as e:
        print("\nエラーが発生しました。", file=sys.stderr)
        print("エラー内容：", e, file=sys.stderr)
        return EXIT_ERROR
