"""The inference loop: match every rule against graph + Issue, form the
conflict set, let the resolver pick when more than one action applies,
execute the chosen rule's DO program, repeat until the episode ends.

Conflict-set semantics: a rule matching under several bindings
contributes several candidates but a single action (its rule identity);
the resolver chooses among distinct actions only, and the binding for
the chosen action is the first in deterministic order.  Conflict sets
with a single distinct action bypass the resolver entirely — there is
no learning signal in a forced move — and only multi-action sets are
recorded as decisions.

When the conflict set is empty the environment turn is advanced, the
same way a human player ends their turn.  A per-turn execution cap
guards liveness against rule packs that fire without changing anything;
hitting it forces the turn to advance.

DO programs execute transactionally: every statement is evaluated and
staged first (including parsing handler commands), and only then are
issue changes, graph writes and handler deliveries committed, so a
failure anywhere leaves issue and graph untouched.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

from .graph import SemanticGraph, SchemaViolation
from .ki import (
    And, Cmp, DoGraphSet, DoHandler, DoSet, DoUnset, Exists, IssueRef,
    KnowledgeItem, ListLit, Lit, Not, Or, Template, VarAttr, VarRef,
)
from .ontology import Ontology
from .values import MISSING, EvaluationError, compare_values

logger = logging.getLogger(__name__)

EPISODE_SCHEMA = "kbrl-episode-v1"

OUTCOME_KINDS = ("won", "lost_race", "destroyed", "truncated")


class ExecutionError(Exception):
    """A DO program could not be executed; nothing was committed."""


class HandlerNotConfiguredError(ExecutionError):
    pass


class InterpolationError(ExecutionError):
    pass


class Issue:
    """The working memory: a mutable attribute map plus an execution history.

    An Issue is created with at least one attribute (the task seed, e.g.
    ``StartPlaying``) and is only changed by rule execution afterwards.
    """

    def __init__(self, attributes: dict[str, Any]):
        if not attributes:
            raise ValueError("an Issue needs at least one starting attribute")
        self.attributes: dict[str, Any] = dict(attributes)
        self.history: list[tuple[int, str]] = []
        self.version = 0

    def get(self, attr: str) -> Any:
        return self.attributes.get(attr, MISSING)

    def set(self, attr: str, value: Any) -> None:
        self.attributes[attr] = value
        self.version += 1

    def unset(self, attr: str) -> None:
        self.attributes.pop(attr, None)
        self.version += 1


Binding = dict[str, Any]  # variable name -> node id or scalar value


def binding_key(binding: Binding) -> str:
    """Canonical, deterministic ordering key for a binding."""
    return json.dumps(
        {k: repr(v) for k, v in binding.items()}, sort_keys=True
    )


@dataclass
class Candidate:
    ki: KnowledgeItem
    binding: Binding


@dataclass
class ConflictSet:
    candidates: list[Candidate]
    turn: int
    cluster: int | None = None

    def action_ids(self) -> list[str]:
        """Distinct rule identities, in deterministic order."""
        seen: list[str] = []
        for cand in self.candidates:
            if cand.ki.kid not in seen:
                seen.append(cand.ki.kid)
        return seen

    def first_candidate(self, action_id: str) -> Candidate:
        for cand in self.candidates:
            if cand.ki.kid == action_id:
                return cand
        raise KeyError(action_id)


# --- expression evaluation -----------------------------------------------------


def eval_operand(expr, binding: Binding, issue: Issue, graph: SemanticGraph):
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, VarRef):
        return binding.get(expr.name, MISSING)
    if isinstance(expr, VarAttr):
        node_id = binding.get(expr.var, MISSING)
        if node_id is MISSING:
            return MISSING
        node = graph.get_node(node_id)
        if node is None:
            return MISSING
        return node.attributes.get(expr.attr, MISSING)
    if isinstance(expr, IssueRef):
        return issue.get(expr.attr)
    if isinstance(expr, ListLit):
        items = [eval_operand(i, binding, issue, graph) for i in expr.items]
        if any(i is MISSING for i in items):
            return MISSING
        return items
    raise TypeError(f"not an operand: {expr!r}")


def eval_condition(expr, binding: Binding, issue: Issue, graph: SemanticGraph) -> bool:
    if isinstance(expr, Or):
        return any(eval_condition(p, binding, issue, graph) for p in expr.parts)
    if isinstance(expr, And):
        return all(eval_condition(p, binding, issue, graph) for p in expr.parts)
    if isinstance(expr, Not):
        return not eval_condition(expr.operand, binding, issue, graph)
    if isinstance(expr, Exists):
        return eval_operand(expr.operand, binding, issue, graph) is not MISSING
    if isinstance(expr, Cmp):
        left = eval_operand(expr.left, binding, issue, graph)
        right = eval_operand(expr.right, binding, issue, graph)
        return compare_values(expr.op, left, right)
    value = eval_operand(expr, binding, issue, graph)
    if isinstance(value, bool):
        return value
    if value is MISSING:
        return False
    raise EvaluationError(f"condition evaluated to non-boolean {value!r}")


# --- rule matching ---------------------------------------------------------------


def _constraint_ok(constraint, node, binding: Binding) -> Binding | None:
    """Apply one ON constraint; returns the (possibly extended) binding."""
    value = node.attributes.get(constraint.attr, MISSING)
    rhs = constraint.value
    if isinstance(rhs, VarRef):
        if rhs.name in binding:
            if compare_values(constraint.op, value, binding[rhs.name]):
                return binding
            return None
        # fresh variable: '==' binds the attribute value
        if value is MISSING:
            return None
        extended = dict(binding)
        extended[rhs.name] = value
        return extended
    rhs_value = rhs.value if isinstance(rhs, Lit) else [
        i.value for i in rhs.items
    ]
    if compare_values(constraint.op, value, rhs_value):
        return binding
    return None


def _match_clause_bindings(clause, graph: SemanticGraph, partial: Binding):
    """Yield bindings extending `partial` for one match clause."""
    lit_constraints = [c for c in clause.constraints
                       if not isinstance(c.value, VarRef)]
    var_constraints = [c for c in clause.constraints
                       if isinstance(c.value, VarRef)]
    for node in graph.nodes_of_type(clause.entity_type):
        attrs = node.attributes
        ok = True
        for c in lit_constraints:  # cheap filters first, before any dict copy
            rhs = c.value.value if isinstance(c.value, Lit) else [
                i.value for i in c.value.items
            ]
            if not compare_values(c.op, attrs.get(c.attr, MISSING), rhs):
                ok = False
                break
        if not ok:
            continue
        binding = dict(partial)
        binding[clause.var] = node.id
        for constraint in var_constraints:
            binding = _constraint_ok(constraint, node, binding)
            if binding is None:
                ok = False
                break
        if not ok:
            continue
        stack = [binding]
        for rel in clause.related:
            extended = []
            for b in stack:
                for edge in graph.edges_from(node.id, rel.verb):
                    target = graph.get_node(edge.to_id)
                    if target is None or target.entity_type != rel.entity_type:
                        continue
                    b2 = dict(b)
                    b2[rel.var] = target.id
                    for constraint in rel.constraints:
                        b2 = _constraint_ok(constraint, target, b2)
                        if b2 is None:
                            break
                    if b2 is not None:
                        extended.append(b2)
            stack = extended
            if not stack:
                break
        yield from stack


def iter_bindings(ki: KnowledgeItem, graph: SemanticGraph) -> list[Binding]:
    """All bindings of a rule's ON pattern against the graph."""
    partials: list[Binding] = [{}]
    for clause in ki.on_pattern:
        nxt: list[Binding] = []
        for partial in partials:
            nxt.extend(_match_clause_bindings(clause, graph, partial))
        partials = nxt
        if not partials:
            break
    return partials


def match_rules(
    kb: Iterable[KnowledgeItem], graph: SemanticGraph, issue: Issue, turn: int = 0
) -> ConflictSet:
    """Form the conflict set: every (rule, binding) whose ON and WHEN hold."""
    candidates: list[Candidate] = []
    for ki in kb:
        for binding in iter_bindings(ki, graph):
            if eval_condition(ki.when_condition, binding, issue, graph):
                candidates.append(Candidate(ki, binding))
    candidates.sort(key=lambda c: (c.ki.kid, binding_key(c.binding)))
    return ConflictSet(candidates, turn)


# --- execution --------------------------------------------------------------------


class ActionHandler(Protocol):
    """Named transport for a fired rule's commands.

    ``stage`` validates/parses the command text and may raise;
    ``commit`` delivers a staged command and is expected not to fail for
    reasons the stage step could have caught.
    """

    def stage(self, text: str) -> Any: ...

    def commit(self, staged: Any) -> None: ...


@dataclass
class ExecutionEffect:
    issue_sets: list[tuple[str, Any]] = field(default_factory=list)
    issue_unsets: list[str] = field(default_factory=list)
    graph_sets: list[tuple[str, str, Any]] = field(default_factory=list)
    commands: list[tuple[str, str]] = field(default_factory=list)  # (handler, text)


def _render_template(
    template: Template, binding: Binding, issue: Issue, graph: SemanticGraph
) -> str:
    out = []
    for part in template.parts:
        if isinstance(part, str):
            out.append(part)
            continue
        value = eval_operand(part, binding, issue, graph)
        if value is MISSING:
            raise InterpolationError(f"unbound value in command template: {part!r}")
        if isinstance(value, bool):
            out.append("true" if value else "false")
        elif isinstance(value, list):
            out.append(",".join(str(v) for v in value))
        else:
            out.append(str(value))
    return "".join(out)


def check_conditions(
    ki: KnowledgeItem, binding: Binding, graph: SemanticGraph, issue: Issue
) -> bool:
    """Re-check that a previously matched (rule, binding) still holds."""
    for clause in ki.on_pattern:
        node = graph.get_node(binding.get(clause.var, ""))
        if node is None or node.entity_type != clause.entity_type:
            return False
        probe: Binding | None = dict(binding)
        for constraint in clause.constraints:
            probe = _constraint_ok(constraint, node, probe)
            if probe is None:
                return False
        for rel in clause.related:
            target = graph.get_node(binding.get(rel.var, ""))
            if target is None or target.entity_type != rel.entity_type:
                return False
            if not any(
                e.to_id == target.id for e in graph.edges_from(node.id, rel.verb)
            ):
                return False
            for constraint in rel.constraints:
                probe = _constraint_ok(constraint, target, probe)
                if probe is None:
                    return False
    return eval_condition(ki.when_condition, binding, issue, graph)


def execute(
    ki: KnowledgeItem,
    binding: Binding,
    graph: SemanticGraph,
    issue: Issue,
    handlers: dict[str, ActionHandler],
) -> ExecutionEffect:
    """Run a rule's DO program transactionally.

    Statements are staged in order; any failure (missing handler,
    interpolation failure, schema violation, bad command) aborts with
    issue and graph untouched.  On success the effects apply in
    statement order and each handler command is delivered in order.
    """
    effect = ExecutionEffect()
    staged_commands: list[tuple[ActionHandler, Any]] = []
    for stmt in ki.do_program:
        if isinstance(stmt, DoSet):
            value = eval_operand(stmt.value, binding, issue, graph)
            if value is MISSING:
                raise InterpolationError(
                    f"issue.set {stmt.attr}: value is missing at execution time"
                )
            effect.issue_sets.append((stmt.attr, value))
        elif isinstance(stmt, DoUnset):
            effect.issue_unsets.append(stmt.attr)
        elif isinstance(stmt, DoGraphSet):
            node_id = binding.get(stmt.var, MISSING)
            value = eval_operand(stmt.value, binding, issue, graph)
            if node_id is MISSING or value is MISSING:
                raise InterpolationError(
                    f"graph.set ${stmt.var}.{stmt.attr}: missing value"
                )
            node = graph.get_node(node_id)
            if node is None:
                raise ExecutionError(f"graph.set: node {node_id!r} no longer exists")
            kind = graph.ontology.attr_kind(node.entity_type, stmt.attr)
            if kind is None:
                raise ExecutionError(
                    f"graph.set: attribute {stmt.attr!r} not declared "
                    f"for {node.entity_type}"
                )
            effect.graph_sets.append((node_id, stmt.attr, value))
        elif isinstance(stmt, DoHandler):
            handler = handlers.get(stmt.handler)
            if handler is None:
                raise HandlerNotConfiguredError(
                    f"no handler named {stmt.handler!r} is configured"
                )
            text = _render_template(stmt.template, binding, issue, graph)
            try:
                staged = handler.stage(text)
            except Exception as exc:
                raise ExecutionError(
                    f"handler {stmt.handler!r} rejected {text!r}: {exc}"
                ) from exc
            effect.commands.append((stmt.handler, text))
            staged_commands.append((handler, staged))
        else:
            raise ExecutionError(f"unknown do statement {stmt!r}")

    # commit
    for attr, value in effect.issue_sets:
        issue.set(attr, value)
    for attr in effect.issue_unsets:
        issue.unset(attr)
    try:
        for node_id, attr, value in effect.graph_sets:
            graph.set_attr(node_id, attr, value)
    except SchemaViolation as exc:  # value kind mismatch caught late
        raise ExecutionError(str(exc)) from exc
    for handler, staged in staged_commands:
        handler.commit(staged)
    return effect


# --- episode running -------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    kind: str  # won | lost_race | destroyed | truncated
    final_turn: int


class Environment(Protocol):
    """What the engine needs from an environment seat."""

    @property
    def turn(self) -> int: ...

    @property
    def state_version(self) -> int: ...

    def sync_graph(self, graph: SemanticGraph) -> None: ...

    def snapshot(self) -> Any: ...

    def advance_turn(self) -> None: ...

    def outcome(self) -> Outcome | None: ...


class ConflictResolver(Protocol):
    def begin_episode(self, rng: random.Random) -> None: ...

    def observe_turn(self, snapshot: Any) -> int | None: ...

    def select(self, action_ids: list[str], rng: random.Random) -> str: ...


class RandomResolver:
    """Uniform-random choice among the distinct actions of a conflict set."""

    def begin_episode(self, rng: random.Random) -> None:
        pass

    def observe_turn(self, snapshot: Any) -> int | None:
        return None

    def select(self, action_ids: list[str], rng: random.Random) -> str:
        return action_ids[rng.randrange(len(action_ids))]


@dataclass
class EpisodeLimits:
    max_turns: int = 400
    max_steps_per_turn: int = 64


@dataclass
class Decision:
    turn: int
    cluster: int | None
    candidates: tuple[str, ...]
    chosen: str
    n_bindings: int


@dataclass
class EpisodeRecord:
    seed: int
    outcome: str = ""
    final_turn: int = 0
    decisions: list[Decision] = field(default_factory=list)
    turn_clusters: list[tuple[int, int | None]] = field(default_factory=list)
    executions: list[tuple[int, str]] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"kind": "header", "schema": EPISODE_SCHEMA, "seed": self.seed},
                sort_keys=True, separators=(",", ":"),
            )
        ]
        for d in self.decisions:
            lines.append(json.dumps(
                {
                    "kind": "decision", "turn": d.turn, "cluster": d.cluster,
                    "candidates": list(d.candidates), "chosen": d.chosen,
                    "n_bindings": d.n_bindings,
                },
                sort_keys=True, separators=(",", ":"),
            ))
        lines.append(json.dumps(
            {
                "kind": "outcome", "outcome": self.outcome,
                "final_turn": self.final_turn,
                "turn_clusters": [list(tc) for tc in self.turn_clusters],
                "executions": [list(e) for e in self.executions],
            },
            sort_keys=True, separators=(",", ":"),
        ))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeRecord":
        record = None
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.get("kind")
            if kind == "header":
                if rec.get("schema") != EPISODE_SCHEMA:
                    raise ValueError(f"unsupported episode schema {rec.get('schema')!r}")
                record = cls(seed=rec["seed"])
            elif kind == "decision":
                record.decisions.append(Decision(
                    rec["turn"], rec["cluster"], tuple(rec["candidates"]),
                    rec["chosen"], rec["n_bindings"],
                ))
            elif kind == "outcome":
                record.outcome = rec["outcome"]
                record.final_turn = rec["final_turn"]
                record.turn_clusters = [tuple(tc) for tc in rec["turn_clusters"]]
                record.executions = [tuple(e) for e in rec["executions"]]
        if record is None:
            raise ValueError("no header record")
        return record


class InferenceEngine:
    """Runs the match / resolve / execute loop for one seat of one episode."""

    def __init__(
        self,
        kb: list[KnowledgeItem],
        ontology: Ontology,
        env: Environment,
        resolver: ConflictResolver,
        handlers: dict[str, ActionHandler],
        limits: EpisodeLimits,
        rng: random.Random,
        issue_attributes: dict[str, Any] | None = None,
        turn_hook: Callable[[Any], None] | None = None,
    ):
        if not kb:
            raise ValueError("knowledge base must not be empty")
        self.kb = kb
        self.ontology = ontology
        self.env = env
        self.resolver = resolver
        self.handlers = handlers
        self.limits = limits
        self.rng = rng
        self.graph = SemanticGraph(ontology)
        self.issue = Issue(issue_attributes or {"StartPlaying": "MicroCiv"})
        self.turn_hook = turn_hook
        self.record = EpisodeRecord(seed=0)
        self._synced_version = -1
        self._observed_turn = -1
        self._current_cluster: int | None = None
        self.resolver.begin_episode(rng)

    def _sync(self) -> None:
        if self.env.state_version != self._synced_version:
            self.env.sync_graph(self.graph)
            self._synced_version = self.env.state_version

    def play_turn(self) -> None:
        """One full environment turn for this seat."""
        turn = self.env.turn
        self._sync()
        if turn != self._observed_turn:
            snapshot = self.env.snapshot()
            cluster = self.resolver.observe_turn(snapshot)
            self.record.turn_clusters.append((turn, cluster))
            if self.turn_hook is not None:
                self.turn_hook(snapshot)
            self._observed_turn = turn
            self._current_cluster = cluster
        steps = 0
        while steps < self.limits.max_steps_per_turn:
            conflict = match_rules(self.kb, self.graph, self.issue, turn)
            conflict.cluster = self._current_cluster
            if not conflict.candidates:
                break
            actions = conflict.action_ids()
            if len(actions) == 1:
                chosen = actions[0]
            else:
                chosen = self.resolver.select(actions, self.rng)
                self.record.decisions.append(Decision(
                    turn, conflict.cluster, tuple(actions), chosen,
                    len(conflict.candidates),
                ))
            candidate = conflict.first_candidate(chosen)
            assert check_conditions(candidate.ki, candidate.binding, self.graph,
                                    self.issue), "matched rule no longer applies"
            execute(candidate.ki, candidate.binding, self.graph, self.issue,
                    self.handlers)
            self.issue.history.append((turn, chosen))
            self.record.executions.append((turn, chosen))
            self._sync()
            steps += 1
        else:
            logger.warning("turn %d: execution cap (%d) reached, forcing end of turn",
                           turn, self.limits.max_steps_per_turn)
        self.env.advance_turn()
        self._sync()

    def finalize(self, outcome: Outcome) -> EpisodeRecord:
        self.record.outcome = outcome.kind
        self.record.final_turn = outcome.final_turn
        return self.record


def run_episode(
    kb: list[KnowledgeItem],
    ontology: Ontology,
    env: Environment,
    resolver: ConflictResolver,
    limits: EpisodeLimits,
    handlers: dict[str, ActionHandler],
    seed: int = 0,
    issue_attributes: dict[str, Any] | None = None,
    turn_hook: Callable[[Any], None] | None = None,
) -> EpisodeRecord:
    """Run one episode of a single engine against its environment.

    Terminates when the environment reports an outcome, or with
    ``truncated`` once ``limits.max_turns`` is reached.
    """
    rng = random.Random(seed)
    engine = InferenceEngine(
        kb, ontology, env, resolver, handlers, limits, rng,
        issue_attributes=issue_attributes, turn_hook=turn_hook,
    )
    engine.record.seed = seed
    while True:
        outcome = env.outcome()
        if outcome is not None:
            return engine.finalize(outcome)
        if env.turn >= limits.max_turns:
            return engine.finalize(Outcome("truncated", env.turn))
        engine.play_turn()
