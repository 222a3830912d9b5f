"""Command-line front end for the portfolio workflows.

Commands:
    solve              three-stage, moving-horizon or side-by-side runs
    simulate           moving horizon with per-branch residual status
    compare            shorthand for ``solve --mode compare``
    export-lp          write the scalarised LP(s) in LP text format
    export-attainment  long-format per-path objective CSV

Exit status: 0 solved, 2 infeasible, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from msmo.errors import ConfigError, FirstStageInfeasibleError, InvalidInstanceError, NotOptimalError, ShapeMismatchError
from msmo.horizon import run_moving_horizon
from msmo.lp import export_lp
from msmo.model import Dominance, ObjectiveMatrix, dominates, evaluate, prefix_model
from msmo.portfolio import config as cfg
from msmo.portfolio.builders import (
    build_three_stage,
    first_stage_reference,
    initial_fund_sensitivity,
    residual_references,
    solution_table,
    three_stage_reference,
)
from msmo.portfolio.instance import MONEY_SCALE
from msmo.portfolio.published import published_matrix
from msmo.portfolio.robustness import robustness_report
from msmo.rgp import scalarize, solve_reference

MODES = ("three-stage", "moving-horizon", "compare")
OUTPUT_ENV = "MSMO_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    instance_path: Optional[Path]
    mode: str = "three-stage"
    epsilon: Optional[float] = None
    weights: Optional[dict] = None  # objective -> weight
    output_dir: Path = Path("msmo-out")
    max_withdrawal: Optional[bool] = None
    lp_export: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {', '.join(MODES)}")
        if self.instance_path is not None and not Path(self.instance_path).is_file():
            raise UsageError(f"instance file not found: {self.instance_path}")


def bundled_config_text() -> str:
    return resources.files("msmo").joinpath("data/portfolio.yaml").read_text()


def load_run(rc: RunConfig):
    """Instance and preferences with command-line overrides applied."""
    text = Path(rc.instance_path).read_text() if rc.instance_path else bundled_config_text()
    inst, prefs = cfg.loads(text)
    if rc.max_withdrawal is not None:
        try:
            inst = inst.with_changes(enforce_max_withdrawal=rc.max_withdrawal)
        except InvalidInstanceError as exc:
            raise ConfigError(str(exc), field="max_withdrawal") from None
    if rc.epsilon is not None:
        prefs = replace(prefs, epsilon=rc.epsilon)
    if rc.weights:
        table = dict(prefs.weight_overrides)
        for obj, w in rc.weights.items():
            table[(obj, "*")] = w
        prefs = replace(prefs, weight_overrides=table)
    return inst, prefs


def parse_weights(text: str) -> dict:
    """``"Z1=2,Z2=0.5"`` -> ``{1: 2.0, 2: 0.5}``."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = part.partition("=")
        key = key.strip().upper()
        if not sep or key not in ("Z1", "Z2"):
            raise UsageError(f"bad weight {part!r}; expected Z1=<w> or Z2=<w>")
        try:
            w = float(val)
        except ValueError:
            raise UsageError(f"bad weight value {val!r}") from None
        if not w > 0:
            raise UsageError(f"weight for {key} must be positive")
        out[int(key[1])] = w
    return out


# -- CSV -------------------------------------------------------------------
def _money(v: float) -> str:
    return f"{v:.2f}"


def export_attainment(matrices: Sequence[ObjectiveMatrix], labels: Sequence[str]) -> str:
    """Long-format CSV (solution_label, path_id, objective_id, value), money units."""
    matrices, labels = list(matrices), list(labels)
    if len(matrices) != len(labels):
        raise ShapeMismatchError(f"{len(matrices)} matrices but {len(labels)} labels")
    if len(set(labels)) != len(labels):
        raise ShapeMismatchError("solution labels must be unique")
    for mat in matrices[1:]:
        same_paths = [p.states for p in mat.paths] == [p.states for p in matrices[0].paths]
        if mat.values.shape != matrices[0].values.shape or not same_paths:
            raise ShapeMismatchError("matrices cover different paths or objectives")
    rows = []
    for label, mat in zip(labels, matrices):
        for k in range(len(mat.paths)):
            for i in range(mat.m):
                rows.append((label, k, i, float(mat.values[i, k])))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solution_label", "path_id", "objective_id", "value"])
    for label, k, i, v in rows:
        w.writerow([label, f"s{k + 1}", f"Z{i + 1}", _money(v)])
    return buf.getvalue()


def objectives_csv(solutions: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solution_label", "path_id", "states", "objective_id", "value"])
    for label, mat in solutions.items():
        for k, path in enumerate(mat.paths):
            for i in range(mat.m):
                w.writerow([label, f"s{k + 1}", "-".join(path.states), f"Z{i + 1}", _money(mat.values[i, k])])
    return buf.getvalue()


def deviations_csv(rows: list) -> str:
    """``rows`` of (label, model, ref, result); goals and deviations in money units."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solution_label", "model", "path", "objective_id", "goal", "value", "deviation"])
    for label, name, ref, res in rows:
        values = res.objective_matrix.as_vector()
        for k, mid in enumerate(res.meta_ids):
            w.writerow([
                label, name, "-".join(mid.path.states), f"Z{mid.objective}",
                _money(ref.goals[k] * MONEY_SCALE), _money(values[k] * MONEY_SCALE),
                _money(res.deviations[k] * MONEY_SCALE),
            ])
    return buf.getvalue()


# -- workflows -------------------------------------------------------------
def _three_stage(inst, prefs, model):
    ref = three_stage_reference(inst, model, prefs.weight, prefs.epsilon, prefs.overrides())
    return ref, solve_reference(model, ref)


def _horizon(inst, prefs, model):
    first_ref = first_stage_reference(inst, prefix_model(model, 2), prefs.weight, prefs.epsilon, prefs.overrides())
    res_refs = residual_references(inst, model, prefs.weight, prefs.epsilon, prefs.overrides())
    return first_ref, res_refs, run_moving_horizon(model, first_ref, res_refs)


def _horizon_report(run) -> str:
    lines = ["residual models:"]
    for k1, st in run.residual_status.items():
        lines.append(f"  branch {k1}: {st.value}")
    return "\n".join(lines) + "\n"


def _write(out: Path, name: str, text: str):
    (out / name).write_text(text)


def run_solve(rc: RunConfig, stream=sys.stdout) -> int:
    inst, prefs = load_run(rc)
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_three_stage(inst)
    matrices, dev_rows, text = {}, [], []
    status = EXIT_OK

    if rc.mode in ("three-stage", "compare"):
        try:
            ref, res = _three_stage(inst, prefs, model)
        except NotOptimalError as exc:
            print(f"three-stage model not solved: {exc.status.value}", file=stream)
            return EXIT_INFEASIBLE
        matrices["three-stage"] = res.objective_matrix.scaled(MONEY_SCALE)
        dev_rows.append(("three-stage", "three-stage", ref, res))
        text.append(solution_table(inst, model, res.decision, "three-stage solution"))
        text.append(f"phi = {res.phi * MONEY_SCALE:.2f}\n")

    if rc.mode in ("moving-horizon", "compare"):
        try:
            first_ref, res_refs, run = _horizon(inst, prefs, model)
        except FirstStageInfeasibleError as exc:
            print(str(exc), file=stream)
            return EXIT_INFEASIBLE
        dev_rows.append(("moving-horizon", "first", first_ref, run.first_stage))
        for k1, r in run.residual_results.items():
            if r is not None:
                dev_rows.append(("moving-horizon", f"residual-{k1}", res_refs[k1], r))
        text.append(_horizon_report(run))
        if run.composite is None:
            print(f"moving horizon: infeasible residual branches {run.infeasible_branches}", file=stream)
            status = EXIT_INFEASIBLE
        else:
            matrices["moving-horizon"] = evaluate(model, run.composite).scaled(MONEY_SCALE)
            text.append(solution_table(inst, model, run.composite, "moving-horizon solution"))

    for label, mat in matrices.items():
        text.append(f"robustness ({label}):\n" + robustness_report(mat, prefs.threshold, inst.initial_capital).format())
    _write(out, "solution.txt", "\n".join(text))
    _write(out, "objectives.csv", objectives_csv(matrices))
    _write(out, "deviations.csv", deviations_csv(dev_rows))
    _write(out, "instance.yaml", cfg.dumps(inst, prefs))
    if rc.mode == "compare" and len(matrices) == 2:
        _write(
            out,
            "dominance.txt",
            "solved:\n"
            + dominance_text(matrices["three-stage"], matrices["moving-horizon"])
            + "\nreported tables:\n"
            + dominance_text(published_matrix("three-stage"), published_matrix("moving-horizon")),
        )
    if rc.lp_export:
        _write(out, "three_stage.lp", export_lp(scalarize(model, three_stage_reference(
            inst, model, prefs.weight, prefs.epsilon, prefs.overrides())), "three_stage"))
    print(f"wrote results to {out}", file=stream)
    return status


def dominance_text(a: ObjectiveMatrix, b: ObjectiveMatrix, names=("three-stage", "moving-horizon")) -> str:
    """Per-path and overall Pareto verdicts of ``a`` against ``b``."""
    words = {
        Dominance.DOMINATES: f"{names[0]} dominates {names[1]}",
        Dominance.DOMINATED_BY: f"{names[1]} dominates {names[0]}",
        Dominance.INCOMPARABLE: "incomparable",
        Dominance.EQUAL: "equal",
    }
    lines = []
    for k, path in enumerate(a.paths):
        verdict = dominates(a.restrict([path.states]), b.restrict([path.states]))
        lines.append(f"s{k + 1} {','.join(path.states)}: {words[verdict]}")
    lines.append(f"overall: {words[dominates(a, b)]}")
    return "\n".join(lines) + "\n"


def run_simulate(rc: RunConfig, stream=sys.stdout) -> int:
    return run_solve(replace(rc, mode="moving-horizon"), stream)


def run_export_lp(rc: RunConfig, stream=sys.stdout) -> int:
    inst, prefs = load_run(rc)
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_three_stage(inst)
    first = prefix_model(model, 2)
    ov = prefs.overrides()
    _write(out, "three_stage.lp", export_lp(scalarize(model, three_stage_reference(inst, model, prefs.weight, prefs.epsilon, ov)), "three_stage"))
    _write(out, "first_two_stage.lp", export_lp(scalarize(first, first_stage_reference(inst, first, prefs.weight, prefs.epsilon, ov)), "first_two_stage"))
    print(f"wrote LP files to {out}", file=stream)
    return EXIT_OK


def run_export_attainment(rc: RunConfig, published: bool, sensitivity: bool, stream=sys.stdout) -> int:
    inst, prefs = load_run(rc)
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    mats, labels = [], []
    if published:
        for name in ("three-stage", "moving-horizon"):
            mats.append(published_matrix(name))
            labels.append(f"published-{name}")
    else:
        model = build_three_stage(inst)
        try:
            _, res = _three_stage(inst, prefs, model)
            _, _, run = _horizon(inst, prefs, model)
        except (NotOptimalError, FirstStageInfeasibleError) as exc:
            print(f"not solved: {exc}", file=stream)
            return EXIT_INFEASIBLE
        mats.append(res.objective_matrix.scaled(MONEY_SCALE))
        labels.append("three-stage")
        if run.composite is not None:
            mats.append(evaluate(model, run.composite).scaled(MONEY_SCALE))
            labels.append("moving-horizon")
    if sensitivity:
        for row in initial_fund_sensitivity(inst, weight=prefs.weight, epsilon=prefs.epsilon):
            if row["matrix"] is not None:
                mats.append(row["matrix"])
                labels.append("b0-" + "-".join(str(int(a)) for a in row["allocation"]))
    _write(out, "attainment.csv", export_attainment(mats, labels))
    print(f"wrote {out / 'attainment.csv'}", file=stream)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--instance", type=Path, help="instance YAML (default: bundled case study)")
    p.add_argument("--epsilon", type=float, help="augmentation coefficient (> 0)")
    p.add_argument("--weights", help="per-objective weights, e.g. Z1=1,Z2=2")
    p.add_argument("--max-withdrawal", choices=("on", "off"), help="enforce the maximum withdrawal rows")
    p.add_argument("--out", type=Path, help=f"output directory (default: ${OUTPUT_ENV} or ./msmo-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msmo", description="Multi-stage multi-objective portfolio planning")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    p = sub.add_parser("solve", help="solve three-stage, moving-horizon or both")
    _common(p)
    p.add_argument("--mode", default="three-stage", help=" | ".join(MODES))
    p.add_argument("--export-lp", action="store_true", help="also write the scalarised LP")
    p = sub.add_parser("simulate", help="run the two-stage moving horizon")
    _common(p)
    p = sub.add_parser("compare", help="three-stage against moving horizon")
    _common(p)
    p = sub.add_parser("export-lp", help="write the scalarised LPs")
    _common(p)
    p = sub.add_parser("export-attainment", help="per-path objective CSV")
    _common(p)
    p.add_argument("--published", action="store_true", help="use the reported tables instead of solving")
    p.add_argument("--sensitivity", action="store_true", help="add runs over alternative initial placements")
    return parser


def _run_config(args, mode="three-stage") -> RunConfig:
    out = args.out or Path(os.environ.get(OUTPUT_ENV) or "msmo-out")
    if args.epsilon is not None and not args.epsilon > 0:
        raise UsageError("--epsilon must be positive")
    return RunConfig(
        instance_path=args.instance,
        mode=getattr(args, "mode", None) or mode,
        epsilon=args.epsilon,
        weights=parse_weights(args.weights) if args.weights else None,
        output_dir=out,
        max_withdrawal=None if args.max_withdrawal is None else args.max_withdrawal == "on",
        lp_export=getattr(args, "export_lp", False),
    )


def main(argv: Optional[Sequence[str]] = None, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command == "compare":
            rc = _run_config(args, "compare")
            return run_solve(rc, stream)
        rc = _run_config(args)
        if args.command == "solve":
            return run_solve(rc, stream)
        if args.command == "simulate":
            return run_simulate(rc, stream)
        if args.command == "export-lp":
            return run_export_lp(rc, stream)
        return run_export_attainment(rc, args.published, args.sensitivity, stream)
    except UsageError as exc:
        print(f"msmo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"msmo: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"msmo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
