"""YAML configuration for portfolio instances and solver preferences.

Layout::

    instance:
      name, currency, stage_count, options, states, root_state,
      transitions: {state: [successors]}
      growth_percent: {state: [per option]}
      penalty_percent: {state: [[per destination + withdrawal] per option]}
      initial_funds: [per option], initial_capital,
      min_withdrawal: [per stage], max_withdrawal, enforce_max_withdrawal,
      goals: {fund: [{state: millions} per stage], withdrawal: [...]}
    preferences:            # optional
      epsilon, weight, threshold,
      goals:   [{objective: Z1, path: [S2, S1] | "*", value: 6.0}, ...]
      weights: [{objective: "*", path: [S4, S5], value: 2.0}, ...]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from msmo.errors import ConfigError, InvalidInstanceError
from msmo.portfolio.instance import PortfolioInstance

REQUIRED = (
    "options", "states", "root_state", "transitions", "growth_percent", "penalty_percent",
    "initial_funds", "initial_capital", "min_withdrawal", "goals",
)


@dataclass(frozen=True)
class Preferences:
    epsilon: float = 1e-4
    weight: float = 1.0
    threshold: float = 500_000
    goal_overrides: dict = field(default_factory=dict)
    weight_overrides: dict = field(default_factory=dict)

    def overrides(self) -> dict:
        return {"goals": dict(self.goal_overrides), "weights": dict(self.weight_overrides)}


def _line_of(node, path) -> int | None:
    """1-based line of the YAML node at ``path`` (keys and indices), best effort."""
    line = None
    for key in path:
        if node is None:
            break
        line = node.start_mark.line + 1
        nxt = None
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == str(key):
                    nxt = v
                    line = k.start_mark.line + 1
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        node = nxt
    if node is not None:
        line = node.start_mark.line + 1
    return line


class _Reader:
    def __init__(self, data, root_node):
        self.data = data
        self.node = root_node

    def fail(self, path, msg):
        raise ConfigError(msg, field=".".join(map(str, path)), line=_line_of(self.node, path))

    def get(self, path, default=KeyError):
        cur = self.data
        for i, key in enumerate(path):
            if isinstance(cur, list) and isinstance(key, int) and 0 <= key < len(cur):
                cur = cur[key]
                continue
            if not isinstance(cur, dict) or key not in cur:
                if default is KeyError:
                    self.fail(path[: i + 1], "missing required field")
                return default
            cur = cur[key]
        return cur

    def seq(self, path, kind=None, default=KeyError):
        v = self.get(path, default)
        if v is default and default is not KeyError:
            return default
        if not isinstance(v, list):
            self.fail(path, "expected a list")
        if kind is not None:
            for i, item in enumerate(v):
                self.check(path + (i,), item, kind)
        return tuple(v)

    def number(self, path, default=KeyError):
        v = self.get(path, default)
        if v is default and default is not KeyError:
            return default
        self.check(path, v, "number")
        return v

    def check(self, path, v, kind):
        if kind == "number" and (isinstance(v, bool) or not isinstance(v, (int, float))):
            self.fail(path, f"expected a number, got {v!r}")
        if kind == "str" and not isinstance(v, str):
            self.fail(path, f"expected a string, got {v!r}")

    def mapping(self, path, default=KeyError):
        v = self.get(path, default)
        if v is default and default is not KeyError:
            return default
        if not isinstance(v, dict):
            self.fail(path, "expected a mapping")
        return v


def _parse_instance(r: _Reader) -> PortfolioInstance:
    base = ("instance",)
    r.mapping(base)
    for key in REQUIRED:
        r.get(base + (key,))
    states = r.seq(base + ("states",), "str")
    transitions = {
        s: r.seq(base + ("transitions", s), "str") for s in r.mapping(base + ("transitions",))
    }
    growth = {s: r.seq(base + ("growth_percent", s), "number") for s in r.mapping(base + ("growth_percent",))}
    penalties = {}
    for s, table in r.mapping(base + ("penalty_percent",)).items():
        rows = r.seq(base + ("penalty_percent", s))
        penalties[s] = tuple(r.seq(base + ("penalty_percent", s, i), "number") for i in range(len(rows)))
    goals = {}
    for kind in ("fund", "withdrawal"):
        stages = r.seq(base + ("goals", kind))
        per_stage = []
        for t in range(len(stages)):
            m = r.mapping(base + ("goals", kind, t))
            for s in m:
                r.number(base + ("goals", kind, t, s))
            per_stage.append(dict(m))
        goals[kind] = tuple(per_stage)
    max_w = r.get(base + ("max_withdrawal",), None)
    if max_w is not None:
        r.check(base + ("max_withdrawal",), max_w, "number")
    enforce = r.get(base + ("enforce_max_withdrawal",), False)
    if not isinstance(enforce, bool):
        r.fail(base + ("enforce_max_withdrawal",), "expected true or false")
    stage_count = r.number(base + ("stage_count",), 3)
    try:
        return PortfolioInstance(
            options=r.seq(base + ("options",), "str"),
            states=states,
            transitions=transitions,
            root_state=r.get(base + ("root_state",)),
            growth_percent=growth,
            penalty_percent=penalties,
            initial_funds=r.seq(base + ("initial_funds",), "number"),
            min_withdrawal=r.seq(base + ("min_withdrawal",), "number"),
            fund_goals=goals["fund"],
            withdrawal_goals=goals["withdrawal"],
            initial_capital=r.number(base + ("initial_capital",)),
            max_withdrawal=max_w,
            enforce_max_withdrawal=enforce,
            stage_count=int(stage_count),
            name=str(r.get(base + ("name",), "portfolio")),
            currency=str(r.get(base + ("currency",), "EUR")),
        )
    except InvalidInstanceError as exc:
        r.fail(base, str(exc))


def _objective_key(r, path, value):
    if value == "*":
        return "*"
    if isinstance(value, str) and value.upper() in ("Z1", "Z2"):
        return int(value[1])
    if value in (1, 2) and not isinstance(value, bool):
        return int(value)
    r.fail(path, f"objective must be Z1, Z2 or '*', got {value!r}")


def _overrides(r: _Reader, path) -> dict:
    out = {}
    for i, item in enumerate(r.seq(path, default=())):
        ipath = path + (i,)
        if not isinstance(item, dict):
            r.fail(ipath, "expected a mapping with objective, path and value")
        obj = _objective_key(r, ipath + ("objective",), r.get(ipath + ("objective",)))
        states = r.get(ipath + ("path",))
        states = "*" if states == "*" else r.seq(ipath + ("path",), "str")
        out[(obj, states)] = float(r.number(ipath + ("value",)))
    return out


def _parse_preferences(r: _Reader) -> Preferences:
    base = ("preferences",)
    if r.get(base, None) is None:
        return Preferences()
    r.mapping(base)
    epsilon = float(r.number(base + ("epsilon",), 1e-4))
    weight = float(r.number(base + ("weight",), 1.0))
    if epsilon <= 0:
        r.fail(base + ("epsilon",), "must be positive")
    if weight <= 0:
        r.fail(base + ("weight",), "must be positive")
    weights = _overrides(r, base + ("weights",))
    for key, v in weights.items():
        if v <= 0:
            r.fail(base + ("weights",), f"weight for {key} must be positive")
    return Preferences(
        epsilon=epsilon,
        weight=weight,
        threshold=float(r.number(base + ("threshold",), 500_000)),
        goal_overrides=_overrides(r, base + ("goals",)),
        weight_overrides=weights,
    )


def loads(text: str) -> tuple:
    """Parse YAML text into ``(PortfolioInstance, Preferences)``."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping with an 'instance' section", line=1)
    r = _Reader(data, node)
    return _parse_instance(r), _parse_preferences(r)


def load(path) -> tuple:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    return loads(text)


def load_instance(path) -> PortfolioInstance:
    return load(path)[0]


def instance_to_dict(inst: PortfolioInstance) -> dict:
    return {
        "name": inst.name,
        "currency": inst.currency,
        "stage_count": inst.stage_count,
        "options": list(inst.options),
        "states": list(inst.states),
        "root_state": inst.root_state,
        "transitions": {s: list(v) for s, v in inst.transitions.items()},
        "growth_percent": {s: list(v) for s, v in inst.growth_percent.items()},
        "penalty_percent": {s: [list(row) for row in t] for s, t in inst.penalty_percent.items()},
        "initial_funds": list(inst.initial_funds),
        "initial_capital": inst.initial_capital,
        "min_withdrawal": list(inst.min_withdrawal),
        "max_withdrawal": inst.max_withdrawal,
        "enforce_max_withdrawal": inst.enforce_max_withdrawal,
        "goals": {
            "fund": [dict(g) for g in inst.fund_goals],
            "withdrawal": [dict(g) for g in inst.withdrawal_goals],
        },
    }


def _pref_items(table: dict) -> list:
    return [
        {"objective": "*" if o == "*" else f"Z{o}", "path": "*" if p == "*" else list(p), "value": v}
        for (o, p), v in table.items()
    ]


def dumps(inst: PortfolioInstance, prefs: Preferences | None = None) -> str:
    doc = {"instance": instance_to_dict(inst)}
    if prefs is not None:
        doc["preferences"] = {
            "epsilon": prefs.epsilon,
            "weight": prefs.weight,
            "threshold": prefs.threshold,
            "goals": _pref_items(prefs.goal_overrides),
            "weights": _pref_items(prefs.weight_overrides),
        }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=120)
