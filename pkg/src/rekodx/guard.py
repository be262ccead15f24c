"""Post-inference sanity checks that veto or annotate glaring mistakes.

Constraints are declarative knowledge carried by the module itself: facts
from outside the probabilistic model. A vetoed diagnosis is not merely
improbable, it is impossible or absurd in context. The guard never raises a
node's rank and never touches posteriors: it only removes or annotates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Constraint, EvidenceState, ModuleIndex


@dataclass(frozen=True)
class Verdict:
    constraint_id: str
    node_id: str
    outcome: str  # "veto" | "warn"
    message: str

    def to_dict(self) -> dict:
        return {"constraint_id": self.constraint_id, "node_id": self.node_id,
                "outcome": self.outcome, "message": self.message}


_NUMERIC = (int, float)


def _is_number(value) -> bool:
    return isinstance(value, _NUMERIC) and not isinstance(value, bool)


def _evaluate_predicate(predicate, context):
    """Returns (fires, unevaluable_reason)."""
    if predicate.attribute not in context:
        return False, f"attribute {predicate.attribute!r} missing from context"
    actual = context[predicate.attribute]
    expected = predicate.value
    op = predicate.op
    if op in ("eq", "ne"):
        if _is_number(actual) and _is_number(expected):
            same = float(actual) == float(expected)
        elif type(actual) is type(expected):
            same = actual == expected
        else:
            same = False  # mismatched types never compare equal
        return (same if op == "eq" else not same), None
    if not _is_number(actual) or not _is_number(expected):
        return False, (f"ordering op {op!r} needs numeric operands, got "
                       f"{actual!r} vs {expected!r}")
    a, b = float(actual), float(expected)
    fires = {"lt": a < b, "le": a <= b, "gt": a > b, "ge": a >= b}[op]
    return fires, None


def _constraint_fires(constraint: Constraint, evidence: EvidenceState):
    """Returns (fires, unevaluable_reason)."""
    if constraint.kind == "excludes":
        return _evaluate_predicate(constraint.when, evidence.context)
    # requires: fires only on an observed contradiction, never on unknowns
    observed = evidence.finding_states.get(constraint.finding)
    if observed is None:
        return False, None
    return observed != constraint.state, None


def check_differential(module, evidence: EvidenceState, ranked) -> tuple[list, list]:
    """Apply every constraint to a ranked differential.

    `ranked` is an ordered sequence of node ids (best first). Constraints are
    evaluated in constraint-id order. A firing veto removes its node from the
    guarded ranking; a firing warn keeps the node annotated. A predicate that
    cannot be evaluated is skipped with a warn-level verdict so the gap is
    visible rather than silent.
    """
    index = ModuleIndex.of(module)
    ranked = list(ranked)
    in_ranking = set(ranked)
    vetoed = set()
    verdicts = []
    for constraint in index.constraints:
        if constraint.node not in in_ranking:
            continue
        fires, unevaluable = _constraint_fires(constraint, evidence)
        if unevaluable is not None:
            verdicts.append(Verdict(
                constraint_id=constraint.id, node_id=constraint.node,
                outcome="warn",
                message=f"UNEVALUABLE: {unevaluable}; constraint skipped ({constraint.message})"))
            continue
        if not fires:
            continue
        verdicts.append(Verdict(
            constraint_id=constraint.id, node_id=constraint.node,
            outcome=constraint.severity, message=constraint.message))
        if constraint.severity == "veto":
            vetoed.add(constraint.node)
    guarded = [node_id for node_id in ranked if node_id not in vetoed]
    return guarded, verdicts
