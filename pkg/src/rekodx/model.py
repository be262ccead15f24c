"""ReKo knowledge modules: domain types, parsing, validation, canonical serialization.

A module is a self-contained knowledge artifact: a taxonomy of category and
disorder nodes, a set of observable findings with acquisition costs, the
probabilistic links between them, trigger rules that pull hypotheses into
play, and guard constraints. Loaded modules are immutable values; every
consumer shares them freely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .errors import ModuleParseError, UnknownIdError

PROB_FLOOR = 1e-6
PROB_CEIL = 1.0 - 1e-6
REKO_VERSION = "1.0"

NODE_KINDS = ("category", "disorder")
FINDING_STATES = ("present", "absent")
CONSTRAINT_KINDS = ("excludes", "requires")
SEVERITIES = ("veto", "warn")
PREDICATE_OPS = ("eq", "ne", "lt", "le", "gt", "ge")
ORDERING_OPS = ("lt", "le", "gt", "ge")

# Engine-config keys a module file may override. Values are checked by
# EngineConfig.merged; listed here so validation can flag typos early.
CONFIG_KEYS = ("tau_expand", "tau_confirm", "tau_reject", "epsilon_gain",
               "max_steps", "goal_gated_acquisition")


def clamp_probability(p: float) -> float:
    """Clamp a probability into [1e-6, 1-1e-6] so odds arithmetic stays finite."""
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not math.isfinite(p):
        raise ValueError(f"probability must be a finite number, got {p!r}")
    if p < 0.0 or p > 1.0:
        raise ValueError(f"probability out of range [0,1]: {p!r}")
    return min(max(float(p), PROB_FLOOR), PROB_CEIL)


@dataclass(frozen=True)
class TaxonomyNode:
    id: str
    name: str
    kind: str  # "category" | "disorder"
    parent: str | None = None
    prior: float | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FindingDef:
    id: str
    name: str
    cost: float
    leak: float
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Link:
    node: str
    finding: str
    sensitivity: float
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TriggerRule:
    finding: str
    state: str  # "present" | "absent"
    node: str
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ContextPredicate:
    attribute: str
    op: str  # eq | ne | lt | le | gt | ge
    value: object


@dataclass(frozen=True)
class Constraint:
    id: str
    kind: str  # "excludes" | "requires"
    node: str
    severity: str  # "veto" | "warn"
    message: str
    when: ContextPredicate | None = None  # excludes
    finding: str | None = None  # requires
    state: str | None = None  # requires
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReKoModule:
    id: str
    name: str
    version: str
    domain: str
    nodes: tuple[TaxonomyNode, ...]
    findings: tuple[FindingDef, ...]
    links: tuple[Link, ...]
    triggers: tuple[TriggerRule, ...]
    constraints: tuple[Constraint, ...]
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    path: str
    message: str

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.code, self.path, self.message)


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ValidationIssue, ...]
    warnings: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "errors": [list(i.as_tuple()) for i in self.errors],
            "warnings": [list(i.as_tuple()) for i in self.warnings],
        }


@dataclass
class EvidenceState:
    """Facts known about one case: observed finding states plus context attributes.

    Findings not listed are unknown. Context attributes are free-form scalars
    (strings, numbers, booleans) consulted by guard constraints.
    """

    finding_states: dict = field(default_factory=dict)
    context: dict = field(default_factory=dict)

    def copy(self) -> "EvidenceState":
        return EvidenceState(dict(self.finding_states), dict(self.context))

    def to_dict(self) -> dict:
        return {
            "finding_states": dict(sorted(self.finding_states.items())),
            "context": dict(sorted(self.context.items())),
        }


# ---------------------------------------------------------------------------
# Parsing


def _parse_fail(code, path, message, line=None, column=None):
    raise ModuleParseError(message, code=code, path=path, line=line, column=column)


def _take_str(obj, key, path, required=True):
    if key not in obj:
        if required:
            _parse_fail("MISSING_FIELD", f"{path}.{key}" if path else key,
                        f"missing required field {key!r}")
        return None
    value = obj[key]
    if not isinstance(value, str):
        _parse_fail("BAD_TYPE", f"{path}.{key}" if path else key,
                    f"expected string, got {type(value).__name__}")
    return value


def _take_number(obj, key, path, required=True):
    if key not in obj:
        if required:
            _parse_fail("MISSING_FIELD", f"{path}.{key}" if path else key,
                        f"missing required field {key!r}")
        return None
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _parse_fail("BAD_TYPE", f"{path}.{key}" if path else key,
                    f"expected number, got {type(value).__name__}")
    return float(value)


def _take_array(obj, key, path, required=True):
    if key not in obj:
        if required:
            _parse_fail("MISSING_FIELD", key, f"missing required field {key!r}")
        return []
    value = obj[key]
    if not isinstance(value, list):
        _parse_fail("BAD_TYPE", key, f"expected array, got {type(value).__name__}")
    return value


def _require_object(value, path):
    if not isinstance(value, dict):
        _parse_fail("BAD_TYPE", path, f"expected object, got {type(value).__name__}")
    return value


def _extras(obj, known):
    return {k: obj[k] for k in obj if k not in known}


def _parse_node(obj, path):
    _require_object(obj, path)
    known = {"id", "name", "kind", "parent", "prior"}
    parent = obj.get("parent")
    if parent is not None and not isinstance(parent, str):
        _parse_fail("BAD_TYPE", f"{path}.parent", "expected string or null")
    return TaxonomyNode(
        id=_take_str(obj, "id", path),
        name=_take_str(obj, "name", path),
        kind=_take_str(obj, "kind", path),
        parent=parent,
        prior=_take_number(obj, "prior", path, required=False),
        extra=_extras(obj, known),
    )


def _parse_finding(obj, path):
    _require_object(obj, path)
    known = {"id", "name", "cost", "leak"}
    return FindingDef(
        id=_take_str(obj, "id", path),
        name=_take_str(obj, "name", path),
        cost=_take_number(obj, "cost", path),
        leak=_take_number(obj, "leak", path),
        extra=_extras(obj, known),
    )


def _parse_link(obj, path):
    _require_object(obj, path)
    known = {"node", "finding", "sensitivity"}
    return Link(
        node=_take_str(obj, "node", path),
        finding=_take_str(obj, "finding", path),
        sensitivity=_take_number(obj, "sensitivity", path),
        extra=_extras(obj, known),
    )


def _parse_trigger(obj, path):
    _require_object(obj, path)
    known = {"finding", "state", "node"}
    return TriggerRule(
        finding=_take_str(obj, "finding", path),
        state=_take_str(obj, "state", path),
        node=_take_str(obj, "node", path),
        extra=_extras(obj, known),
    )


def _parse_constraint(obj, path):
    _require_object(obj, path)
    known = {"id", "kind", "node", "severity", "message", "when", "finding", "state"}
    kind = _take_str(obj, "kind", path)
    when = None
    finding = None
    state = None
    if kind == "excludes":
        raw = obj.get("when")
        if raw is None:
            _parse_fail("MISSING_FIELD", f"{path}.when", "excludes constraint needs a 'when' predicate")
        _require_object(raw, f"{path}.when")
        if "value" not in raw:
            _parse_fail("MISSING_FIELD", f"{path}.when.value", "missing required field 'value'")
        when = ContextPredicate(
            attribute=_take_str(raw, "attribute", f"{path}.when"),
            op=_take_str(raw, "op", f"{path}.when"),
            value=raw["value"],
        )
    elif kind == "requires":
        finding = _take_str(obj, "finding", path)
        state = _take_str(obj, "state", path)
    # Unknown kinds parse structurally; validation rejects them.
    return Constraint(
        id=_take_str(obj, "id", path),
        kind=kind,
        node=_take_str(obj, "node", path),
        severity=_take_str(obj, "severity", path),
        message=_take_str(obj, "message", path),
        when=when,
        finding=finding,
        state=state,
        extra=_extras(obj, known),
    )


def _check_unique_ids(items, section):
    seen = {}
    for i, item in enumerate(items):
        if item.id in seen:
            _parse_fail("DUPLICATE_ID", f"{section}[{i}]",
                        f"duplicate id {item.id!r} (first at {section}[{seen[item.id]}])")
        seen[item.id] = i


def parse_module(text: str) -> ReKoModule:
    """Parse a UTF-8 JSON document into a ReKoModule.

    Enforces structure only (syntax, required fields, field types, id
    uniqueness); semantic invariants are the job of validate(). Unknown keys
    are preserved so serialization round-trips, and are reported as warnings
    by validate().
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if text is None or not text.strip():
        _parse_fail("PARSE_ERROR", "", "unexpected end of input", line=1, column=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        _parse_fail("PARSE_ERROR", "", exc.msg, line=exc.lineno, column=exc.colno)
    if not isinstance(doc, dict):
        _parse_fail("BAD_TYPE", "", f"top level must be an object, got {type(doc).__name__}")

    reko_version = _take_str(doc, "reko_version", "")
    if reko_version != REKO_VERSION:
        _parse_fail("BAD_VERSION", "reko_version",
                    f"unsupported reko_version {reko_version!r} (expected {REKO_VERSION!r})")

    nodes = tuple(_parse_node(o, f"nodes[{i}]") for i, o in enumerate(_take_array(doc, "nodes", "")))
    findings = tuple(_parse_finding(o, f"findings[{i}]")
                     for i, o in enumerate(_take_array(doc, "findings", "")))
    links = tuple(_parse_link(o, f"links[{i}]")
                  for i, o in enumerate(_take_array(doc, "links", "", required=False)))
    triggers = tuple(_parse_trigger(o, f"triggers[{i}]")
                     for i, o in enumerate(_take_array(doc, "triggers", "", required=False)))
    constraints = tuple(_parse_constraint(o, f"constraints[{i}]")
                        for i, o in enumerate(_take_array(doc, "constraints", "", required=False)))

    _check_unique_ids(nodes, "nodes")
    _check_unique_ids(findings, "findings")
    _check_unique_ids(constraints, "constraints")

    config = doc.get("config", {})
    if not isinstance(config, dict):
        _parse_fail("BAD_TYPE", "config", f"expected object, got {type(config).__name__}")

    known_top = {"reko_version", "id", "name", "version", "domain",
                 "nodes", "findings", "links", "triggers", "constraints", "config"}
    return ReKoModule(
        id=_take_str(doc, "id", ""),
        name=_take_str(doc, "name", ""),
        version=_take_str(doc, "version", ""),
        domain=_take_str(doc, "domain", ""),
        nodes=nodes,
        findings=findings,
        links=links,
        triggers=triggers,
        constraints=constraints,
        config=dict(config),
        extra=_extras(doc, known_top),
    )


# ---------------------------------------------------------------------------
# Serialization


def _node_doc(n: TaxonomyNode) -> dict:
    doc = {"id": n.id, "name": n.name, "kind": n.kind}
    if n.parent is not None:
        doc["parent"] = n.parent
    if n.prior is not None:
        doc["prior"] = n.prior
    doc.update(n.extra)
    return doc


def _finding_doc(f: FindingDef) -> dict:
    doc = {"id": f.id, "name": f.name, "cost": f.cost, "leak": f.leak}
    doc.update(f.extra)
    return doc


def _link_doc(l: Link) -> dict:
    doc = {"node": l.node, "finding": l.finding, "sensitivity": l.sensitivity}
    doc.update(l.extra)
    return doc


def _trigger_doc(t: TriggerRule) -> dict:
    doc = {"finding": t.finding, "state": t.state, "node": t.node}
    doc.update(t.extra)
    return doc


def _constraint_doc(c: Constraint) -> dict:
    doc = {"id": c.id, "kind": c.kind, "node": c.node,
           "severity": c.severity, "message": c.message}
    if c.when is not None:
        doc["when"] = {"attribute": c.when.attribute, "op": c.when.op, "value": c.when.value}
    if c.finding is not None:
        doc["finding"] = c.finding
    if c.state is not None:
        doc["state"] = c.state
    doc.update(c.extra)
    return doc


def module_document(module: ReKoModule) -> dict:
    """The module as a plain JSON-ready dict in normalized (sorted) order."""
    doc = {
        "reko_version": REKO_VERSION,
        "id": module.id,
        "name": module.name,
        "version": module.version,
        "domain": module.domain,
        "nodes": [_node_doc(n) for n in sorted(module.nodes, key=lambda n: n.id)],
        "findings": [_finding_doc(f) for f in sorted(module.findings, key=lambda f: f.id)],
        "links": [_link_doc(l) for l in sorted(module.links, key=lambda l: (l.node, l.finding))],
        "triggers": [_trigger_doc(t) for t in
                     sorted(module.triggers, key=lambda t: (t.finding, t.node, t.state))],
        "constraints": [_constraint_doc(c) for c in sorted(module.constraints, key=lambda c: c.id)],
        "config": module.config,
    }
    doc.update(module.extra)
    return doc


def serialize_module(module: ReKoModule) -> str:
    """Normalized serialization: keys sorted, arrays sorted by id, shortest floats."""
    return json.dumps(module_document(module), sort_keys=True, indent=2,
                      ensure_ascii=False, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# Validation


class _Issues:
    def __init__(self):
        self.errors: list[ValidationIssue] = []
        self.warnings: list[ValidationIssue] = []

    def error(self, code, path, message):
        self.errors.append(ValidationIssue(code, path, message))

    def warn(self, code, path, message):
        self.warnings.append(ValidationIssue(code, path, message))


def _check_probability(value, path, issues, *, required, kind):
    if value is None:
        if required:
            issues.error("MISSING_PRIOR", path, f"{kind} requires a prior")
        return
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        issues.error("PROB_RANGE", path, f"probability out of range [0,1]: {value!r}")
        return
    if value < PROB_FLOOR or value > PROB_CEIL:
        issues.warn("CLAMPED", path,
                    f"value {value!r} outside [{PROB_FLOOR}, {PROB_CEIL}]; "
                    f"engine clamps it to {clamp_probability(value)!r}")


def _warn_extras(extra, path, issues):
    for key in sorted(extra):
        issues.warn("UNKNOWN_KEY", f"{path}.{key}" if path else key,
                    f"unknown key {key!r} preserved but ignored")


def validate(module: ReKoModule) -> ValidationReport:
    """Check every semantic invariant of a parsed module.

    Violations are reported, never raised; a module with zero errors is
    accepted by every downstream consumer. Pure: the same module always
    yields the same report.
    """
    issues = _Issues()

    for key, value in (("id", module.id), ("name", module.name),
                       ("version", module.version), ("domain", module.domain)):
        if not value:
            issues.error("BAD_VALUE", key, f"{key} must be a non-empty string")

    node_ids = {}
    for i, node in enumerate(module.nodes):
        path = f"nodes[{i}]"
        if node.id in node_ids:
            issues.error("DUPLICATE_ID", path, f"duplicate node id {node.id!r}")
        node_ids[node.id] = node
        if node.kind not in NODE_KINDS:
            issues.error("BAD_VALUE", f"{path}.kind",
                         f"kind must be one of {NODE_KINDS}, got {node.kind!r}")
        _check_probability(node.prior, f"{path}.prior", issues,
                           required=node.kind == "disorder", kind="disorder")
        _warn_extras(node.extra, path, issues)

    finding_ids = {}
    for i, f in enumerate(module.findings):
        path = f"findings[{i}]"
        if f.id in finding_ids:
            issues.error("DUPLICATE_ID", path, f"duplicate finding id {f.id!r}")
        finding_ids[f.id] = f
        if not math.isfinite(f.cost) or f.cost <= 0.0:
            issues.error("NONPOSITIVE_COST", f"{path}.cost",
                         f"cost must be a positive number, got {f.cost!r}")
        _check_probability(f.leak, f"{path}.leak", issues, required=True, kind="finding leak")
        _warn_extras(f.extra, path, issues)

    # Taxonomy shape: parents resolve, no cycles, disorders are leaves.
    children: dict[str, list[str]] = {}
    for i, node in enumerate(module.nodes):
        if node.parent is None:
            continue
        path = f"nodes[{i}].parent"
        if node.parent not in node_ids:
            issues.error("DANGLING_REF", path, f"parent {node.parent!r} does not exist")
        elif node.parent == node.id:
            issues.error("CYCLE", path, f"node {node.id!r} is its own parent")
        else:
            children.setdefault(node.parent, []).append(node.id)

    for i, node in enumerate(module.nodes):
        seen = {node.id}
        cursor = node.parent
        while cursor is not None and cursor in node_ids:
            if cursor in seen:
                issues.error("CYCLE", f"nodes[{i}]",
                             f"parent chain of {node.id!r} revisits {cursor!r}")
                break
            seen.add(cursor)
            cursor = node_ids[cursor].parent

    for parent_id, kids in children.items():
        parent = node_ids.get(parent_id)
        if parent is not None and parent.kind == "disorder":
            issues.error("DISORDER_NOT_LEAF", f"nodes[{parent_id}]",
                         f"disorder {parent_id!r} has children {sorted(kids)}")

    if not any(n.kind == "disorder" for n in module.nodes):
        issues.error("NO_DISORDER", "nodes", "module must contain at least one disorder")

    linked_nodes = set()
    seen_pairs = set()
    for i, link in enumerate(module.links):
        path = f"links[{i}]"
        if link.node not in node_ids:
            issues.error("DANGLING_REF", f"{path}.node", f"node {link.node!r} does not exist")
        if link.finding not in finding_ids:
            issues.error("DANGLING_REF", f"{path}.finding",
                         f"finding {link.finding!r} does not exist")
        pair = (link.node, link.finding)
        if pair in seen_pairs:
            issues.error("DUPLICATE_LINK", path, f"more than one link for {pair!r}")
        seen_pairs.add(pair)
        linked_nodes.add(link.node)
        _check_probability(link.sensitivity, f"{path}.sensitivity", issues,
                           required=True, kind="link sensitivity")
        _warn_extras(link.extra, path, issues)

    # A category that carries links is scored like a disorder, so it needs a
    # prior; otherwise the engine could not evaluate its expansion threshold.
    for i, node in enumerate(module.nodes):
        if node.kind == "category" and node.id in linked_nodes and node.prior is None:
            issues.error("MISSING_PRIOR", f"nodes[{i}].prior",
                         f"category {node.id!r} carries links and therefore needs a prior")

    seen_triggers = set()
    for i, t in enumerate(module.triggers):
        path = f"triggers[{i}]"
        if t.finding not in finding_ids:
            issues.error("DANGLING_REF", f"{path}.finding",
                         f"finding {t.finding!r} does not exist")
        if t.node not in node_ids:
            issues.error("DANGLING_REF", f"{path}.node", f"node {t.node!r} does not exist")
        if t.state not in FINDING_STATES:
            issues.error("BAD_VALUE", f"{path}.state",
                         f"state must be one of {FINDING_STATES}, got {t.state!r}")
        key = (t.finding, t.state, t.node)
        if key in seen_triggers:
            issues.warn("DUPLICATE_TRIGGER", path, f"duplicate trigger {key!r}")
        seen_triggers.add(key)
        _warn_extras(t.extra, path, issues)

    for i, c in enumerate(module.constraints):
        path = f"constraints[{i}]"
        if c.node not in node_ids:
            issues.error("DANGLING_REF", f"{path}.node", f"node {c.node!r} does not exist")
        if c.kind not in CONSTRAINT_KINDS:
            issues.error("BAD_VALUE", f"{path}.kind",
                         f"kind must be one of {CONSTRAINT_KINDS}, got {c.kind!r}")
        if c.severity not in SEVERITIES:
            issues.error("BAD_VALUE", f"{path}.severity",
                         f"severity must be one of {SEVERITIES}, got {c.severity!r}")
        if not c.message:
            issues.error("BAD_VALUE", f"{path}.message", "message must be non-empty")
        if c.kind == "excludes" and c.when is not None:
            if c.when.op not in PREDICATE_OPS:
                issues.error("BAD_VALUE", f"{path}.when.op",
                             f"op must be one of {PREDICATE_OPS}, got {c.when.op!r}")
            elif c.when.op in ORDERING_OPS and (
                    isinstance(c.when.value, bool) or not isinstance(c.when.value, (int, float))):
                issues.error("BAD_VALUE", f"{path}.when.value",
                             f"ordering op {c.when.op!r} requires a numeric value")
            if not c.when.attribute:
                issues.error("BAD_VALUE", f"{path}.when.attribute",
                             "attribute must be non-empty")
        if c.kind == "requires":
            if c.finding not in finding_ids:
                issues.error("DANGLING_REF", f"{path}.finding",
                             f"finding {c.finding!r} does not exist")
            if c.state not in FINDING_STATES:
                issues.error("BAD_VALUE", f"{path}.state",
                             f"state must be one of {FINDING_STATES}, got {c.state!r}")
        _warn_extras(c.extra, path, issues)

    for key in sorted(module.config):
        if key not in CONFIG_KEYS:
            issues.warn("UNKNOWN_KEY", f"config.{key}",
                        f"unknown config key {key!r} preserved but ignored")
    # The module must start a session with defaults + its own overrides.
    from .cycle import EngineConfig  # local import: cycle depends on model
    try:
        EngineConfig.merged(module.config)
    except Exception as exc:
        issues.error("CONFIG_ERROR", "config", str(exc))

    _warn_extras(module.extra, "", issues)

    return ValidationReport(errors=tuple(issues.errors), warnings=tuple(issues.warnings))


# ---------------------------------------------------------------------------
# Index


class ModuleIndex:
    """Read-optimized view over a validated module.

    Probabilities exposed here are already clamped; the engine never touches
    raw authored values. Safe to share across threads.
    """

    def __init__(self, module: ReKoModule):
        self.module = module
        self.nodes = {n.id: n for n in module.nodes}
        self.findings = {f.id: f for f in module.findings}
        self.disorders = tuple(sorted(n.id for n in module.nodes if n.kind == "disorder"))
        self.roots = tuple(sorted(n.id for n in module.nodes if n.parent is None))
        self.children = {}
        for n in module.nodes:
            if n.parent is not None:
                self.children.setdefault(n.parent, []).append(n.id)
        for kids in self.children.values():
            kids.sort()

        self.leak = {f.id: clamp_probability(f.leak) for f in module.findings}
        self.cost = {f.id: float(f.cost) for f in module.findings}
        self.prior = {n.id: (clamp_probability(n.prior) if n.prior is not None else None)
                      for n in module.nodes}

        self.links_by_node: dict[str, dict[str, float]] = {}
        self.links_by_finding: dict[str, dict[str, float]] = {}
        # Per-link log likelihood ratios, precomputed once.
        self.log_lr_present: dict[tuple[str, str], float] = {}
        self.log_lr_absent: dict[tuple[str, str], float] = {}
        for link in module.links:
            s = clamp_probability(link.sensitivity)
            l = self.leak[link.finding]
            self.links_by_node.setdefault(link.node, {})[link.finding] = s
            self.links_by_finding.setdefault(link.finding, {})[link.node] = s
            self.log_lr_present[(link.node, link.finding)] = math.log(s) - math.log(l)
            self.log_lr_absent[(link.node, link.finding)] = math.log1p(-s) - math.log1p(-l)

        self.triggers_by_node: dict[str, list[tuple[str, str]]] = {}
        for t in module.triggers:
            self.triggers_by_node.setdefault(t.node, []).append((t.finding, t.state))

        self.constraints = tuple(sorted(module.constraints, key=lambda c: c.id))

    @classmethod
    def of(cls, module) -> "ModuleIndex":
        return module if isinstance(module, ModuleIndex) else cls(module)

    def is_link_free_category(self, node_id: str) -> bool:
        node = self.nodes[node_id]
        return node.kind == "category" and node_id not in self.links_by_node

    def require_node(self, node_id: str) -> TaxonomyNode:
        node = self.nodes.get(node_id)
        if node is None:
            raise UnknownIdError(f"unknown node id {node_id!r}")
        return node

    def require_finding(self, finding_id: str) -> FindingDef:
        f = self.findings.get(finding_id)
        if f is None:
            raise UnknownIdError(f"unknown finding id {finding_id!r}")
        return f

    def sensitivity(self, node_id: str, finding_id: str) -> float | None:
        """Clamped link sensitivity, or None when the pair is unlinked."""
        return self.links_by_node.get(node_id, {}).get(finding_id)

    def ancestors(self, node_id: str):
        cursor = self.nodes[node_id].parent
        while cursor is not None:
            yield cursor
            cursor = self.nodes[cursor].parent


def perturbed_copy(module: ReKoModule, *, prior_factor: float | None = None,
                   sensitivity_factor: float | None = None,
                   leak_factor: float | None = None) -> ReKoModule:
    """New module with targeted probabilities multiplied and clamped."""
    nodes = module.nodes
    if prior_factor is not None:
        nodes = tuple(
            replace(n, prior=clamp_probability(min(max(prior_factor * n.prior, 0.0), 1.0)))
            if n.prior is not None else n
            for n in nodes)
    findings = module.findings
    if leak_factor is not None:
        findings = tuple(
            replace(f, leak=clamp_probability(min(max(leak_factor * f.leak, 0.0), 1.0)))
            for f in findings)
    links = module.links
    if sensitivity_factor is not None:
        links = tuple(
            replace(l, sensitivity=clamp_probability(
                min(max(sensitivity_factor * l.sensitivity, 0.0), 1.0)))
            for l in links)
    return replace(module, nodes=nodes, findings=findings, links=links)
