"""Scenario lattice: stages, parent-dependent transitions and scenario paths.

A tree with ``stage_count`` T has one decision stage 0 followed by T-1
realisation stages.  Nodes are identified by their prefix, a tuple of the
states realised so far: ``()`` is the stage-0 root, ``("S2",)`` a stage-1
node, ``("S2", "S1")`` a stage-2 node and so on.  Leaves are scenario paths.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Optional

from msmo.errors import (
    DanglingTransitionError,
    EmptyStageError,
    RangeError,
    UnknownStateError,
    UnreachableStateError,
)

State = Hashable
Node = tuple


@dataclass(frozen=True)
class ScenarioPath:
    """An ordered sequence of realised states plus its enumeration index."""

    states: tuple
    index: int

    def __len__(self):
        return len(self.states)

    @property
    def label(self) -> str:
        return "/".join(str(s) for s in self.states) if self.states else "root"


@dataclass(frozen=True)
class MetaObjectiveId:
    """An (objective, scenario path) pair.  ``objective`` is 1-based."""

    objective: int
    path: ScenarioPath

    @property
    def label(self) -> str:
        return f"Z{self.objective}[{self.path.label}]"


@dataclass(frozen=True)
class ScenarioTree:
    """Validated, immutable scenario structure.

    ``transitions[t]`` maps a state to its admissible successors for the step
    from stage t to stage t+1 (step 0 leaves the root).  Build instances with
    :func:`build_tree`.
    """

    stage_count: int
    states: tuple  # tuple of tuples, one per realisation stage 1..T-1
    transitions: tuple  # T-1 dicts (state -> tuple of successor states)
    root_state: Optional[State] = None
    _children: dict = field(default=None, repr=False, compare=False)

    # -- structure -----------------------------------------------------
    def children(self, node: Node) -> tuple:
        """States that can follow ``node``, in declared stage order."""
        try:
            return self._children[tuple(node)]
        except KeyError:
            raise UnknownStateError(f"node {node!r} is not part of the tree") from None

    def nodes(self, level: Optional[int] = None) -> list:
        """All node prefixes, level by level, lexicographic within a level."""
        if level is not None:
            return [n for n in self._ordered_nodes if len(n) == level]
        return list(self._ordered_nodes)

    def has_node(self, node: Node) -> bool:
        return tuple(node) in self._children

    @cached_property
    def _ordered_nodes(self) -> tuple:
        out = [()]
        frontier = [()]
        for _ in range(self.stage_count - 1):
            frontier = [n + (s,) for n in frontier for s in self._children[n]]
            out.extend(frontier)
        return tuple(out)

    @cached_property
    def paths(self) -> tuple:
        leaves = [n for n in self._ordered_nodes if len(n) == self.stage_count - 1]
        return tuple(ScenarioPath(states=n, index=i) for i, n in enumerate(leaves))

    @property
    def path_count(self) -> int:
        return len(self.paths)

    def node_count(self) -> int:
        return len(self._ordered_nodes)

    def branching(self) -> Optional[list]:
        """Per-stage branch counts p(1..T-1) if uniform, else ``None``."""
        counts = []
        for level in range(self.stage_count - 1):
            sizes = {len(self._children[n]) for n in self.nodes(level)}
            if len(sizes) != 1:
                return None
            counts.append(sizes.pop())
        return counts

    def truncate(self, keep_stages: int) -> "ScenarioTree":
        if not 2 <= keep_stages <= self.stage_count:
            raise RangeError(f"keep_stages must lie in [2, {self.stage_count}], got {keep_stages}")
        return build_tree(
            keep_stages,
            self.states[: keep_stages - 1],
            list(self.transitions[: keep_stages - 1]),
            self.root_state,
            _anchored=self._anchored,
        )

    def subtree(self, first_state: State) -> "ScenarioTree":
        """Tree rooted at the stage-1 node ``(first_state,)``."""
        if first_state not in self._children[()]:
            raise UnknownStateError(f"{first_state!r} is not a stage-1 branch of this tree")
        if self.stage_count < 3:
            raise RangeError("subtree needs at least three stages")
        # keep only the states reachable from the new root, stage by stage
        frontier = {first_state}
        states, trans = [], []
        for step in range(1, self.stage_count - 1):
            tmap = {s: self.transitions[step][s] for s in frontier if s in self.transitions[step]}
            reached = set().union(*tmap.values()) if tmap else set()
            states.append(tuple(s for s in self.states[step] if s in reached))
            trans.append(tmap)
            frontier = reached
        return build_tree(self.stage_count - 1, states, trans, first_state)

    @property
    def _anchored(self) -> bool:
        return self.root_state is not None


def _normalize_transitions(transitions, steps: int) -> list:
    if isinstance(transitions, Mapping):
        return [transitions] * steps
    seq = list(transitions)
    if len(seq) == steps - 1:
        # no explicit root step; the root branches into every stage-1 state
        seq = [{}] + seq
    if len(seq) != steps:
        raise DanglingTransitionError(
            f"expected {steps} transition maps (one per step), got {len(seq)}"
        )
    return seq


def build_tree(
    stage_count: int,
    states_per_stage: Sequence,
    transitions,
    root_state: Optional[State] = None,
    *,
    _anchored: Optional[bool] = None,
) -> ScenarioTree:
    """Validate the inputs and build a :class:`ScenarioTree`.

    Args:
        stage_count: number of stages T (>= 2).
        states_per_stage: one state list per realisation stage 1..T-1.  A
            single flat list of states is accepted and reused for every stage.
        transitions: either one mapping ``state -> successors`` used for every
            step, or a list of such mappings, one per step.  Step 0 applies to
            ``root_state``; it is ignored when the tree has no root state.
        root_state: current state anchoring stage 0, or ``None``.
    """
    if stage_count < 2:
        raise RangeError(f"stage_count must be >= 2, got {stage_count}")
    steps = stage_count - 1
    stages = list(states_per_stage)
    if stages and not isinstance(stages[0], (list, tuple)):
        stages = [stages] * steps
    if len(stages) != steps:
        raise EmptyStageError(f"need states for {steps} realisation stages, got {len(stages)}")
    stages = [tuple(s) for s in stages]
    for t, st in enumerate(stages, start=1):
        if not st:
            raise EmptyStageError(f"realisation stage {t} has no states")
        if len(set(st)) != len(st):
            raise DanglingTransitionError(f"duplicate state in stage {t}")

    trans = _normalize_transitions(transitions, steps)
    anchored = root_state is not None if _anchored is None else _anchored
    is_stationary = isinstance(transitions, Mapping)
    if is_stationary:
        declared = set().union(*(set(s) for s in stages)) | ({root_state} if anchored else set())
        for src, dsts in transitions.items():
            unknown = ({src} | set(dsts)) - declared
            if unknown:
                raise DanglingTransitionError(
                    f"transition references undeclared states {sorted(map(str, unknown))}"
                )

    norm = []
    for step, tmap in enumerate(trans):
        targets = set(stages[step])
        sources = set(stages[step - 1]) if step > 0 else ({root_state} if anchored else set())
        clean = {}
        for src, dsts in dict(tmap).items():
            if src not in sources:
                if is_stationary or (step == 0 and not anchored):
                    continue
                raise DanglingTransitionError(f"step {step}: unknown source state {src!r}")
            dsts = tuple(dsts)
            bad = [d for d in dsts if d not in targets]
            if bad and not is_stationary:
                raise DanglingTransitionError(f"step {step}: {src!r} -> unknown states {bad!r}")
            order = {s: i for i, s in enumerate(stages[step])}
            clean[src] = tuple(sorted((d for d in dsts if d in targets), key=order.__getitem__))
        norm.append(clean)

    # every state of stage t+1 (t >= 1) must have a predecessor in stage t
    for step in range(1, steps):
        reached = set()
        for src in stages[step - 1]:
            reached.update(norm[step].get(src, ()))
        missing = [s for s in stages[step] if s not in reached]
        if missing:
            raise UnreachableStateError(f"stage {step + 1} states {missing!r} have no predecessor")

    children: dict = {}
    if anchored:
        if root_state not in norm[0]:
            raise DanglingTransitionError(f"root state {root_state!r} has no transitions")
        first = norm[0][root_state]
        if not first:
            raise UnreachableStateError(f"root state {root_state!r} reaches no stage-1 state")
    else:
        first = stages[0]
    children[()] = tuple(first)
    frontier = [(s,) for s in first]
    for step in range(1, steps):
        nxt = []
        for node in frontier:
            succ = norm[step].get(node[-1], ())
            if not succ:
                raise UnreachableStateError(f"node {node!r} has no successor in stage {step + 1}")
            children[node] = succ
            nxt.extend(node + (s,) for s in succ)
        frontier = nxt
    for node in frontier:
        children[node] = ()

    return ScenarioTree(
        stage_count=stage_count,
        states=tuple(stages),
        transitions=tuple(norm),
        root_state=root_state,
        _children=children,
    )


def enumerate_paths(tree: ScenarioTree) -> list:
    """Scenario paths in deterministic lexicographic (declared) order."""
    return list(tree.paths)


def meta_objectives(tree: ScenarioTree, m: int) -> list:
    """Meta-objective ids, path-major then objective-minor."""
    if m < 1:
        raise RangeError(f"objective count must be >= 1, got {m}")
    return [MetaObjectiveId(i, p) for p in tree.paths for i in range(1, m + 1)]
