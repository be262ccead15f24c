"""The diagnostic assessment loop.

A session walks the cycle: apply evidence, regenerate hypotheses top-down
over the taxonomy, pick a goal, score candidate findings by expected entropy
reduction per unit cost, ingest the answer, and decide termination. Every
operation is a pure function of the session value and its arguments, so
replays are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (AlreadyObservedError, ConfigError, InvalidModuleError,
                     SessionBudgetError, UnknownIdError)
from .model import EvidenceState, ModuleIndex, ReKoModule, validate
from .reasoning import binary_entropy, log_odds, posterior_log_odds, sigmoid

_CONFIG_FIELDS = {
    "tau_expand": float,
    "tau_confirm": float,
    "tau_reject": float,
    "epsilon_gain": float,
    "max_steps": int,
    "goal_gated_acquisition": bool,
}


@dataclass(frozen=True)
class EngineConfig:
    """Thresholds steering hypothesis activation, resolution, and acquisition."""

    tau_expand: float = 0.10
    tau_confirm: float = 0.95
    tau_reject: float = 0.01
    epsilon_gain: float = 1e-4
    max_steps: int = 50
    goal_gated_acquisition: bool = False

    def check(self) -> None:
        if not (0.0 < self.tau_reject < self.tau_expand < self.tau_confirm < 1.0):
            raise ConfigError(
                "thresholds must satisfy 0 < tau_reject < tau_expand < tau_confirm < 1, got "
                f"tau_reject={self.tau_reject}, tau_expand={self.tau_expand}, "
                f"tau_confirm={self.tau_confirm}")
        if self.epsilon_gain <= 0.0:
            raise ConfigError(f"epsilon_gain must be > 0, got {self.epsilon_gain}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")

    @classmethod
    def merged(cls, module_config: dict | None = None,
               overrides: dict | None = None) -> "EngineConfig":
        """Defaults, then module overrides, then caller overrides; then checked.

        Unknown keys in a module file are ignored (validation warns about
        them); unknown keys from a caller are an error.
        """
        values = {}
        for source, strict in ((module_config, False), (overrides, True)):
            if not source:
                continue
            for key, value in source.items():
                if key not in _CONFIG_FIELDS:
                    if strict:
                        raise ConfigError(f"unknown config key {key!r}")
                    continue
                want = _CONFIG_FIELDS[key]
                if want is float:
                    if isinstance(value, bool) or not isinstance(value, (int, float)):
                        raise ConfigError(f"config key {key!r} must be a number")
                    value = float(value)
                elif want is int:
                    if isinstance(value, bool) or not isinstance(value, int):
                        raise ConfigError(f"config key {key!r} must be an integer")
                elif want is bool and not isinstance(value, bool):
                    raise ConfigError(f"config key {key!r} must be a boolean")
                values[key] = value
        config = cls(**values)
        config.check()
        return config

    def to_dict(self) -> dict:
        return {
            "tau_expand": self.tau_expand,
            "tau_confirm": self.tau_confirm,
            "tau_reject": self.tau_reject,
            "epsilon_gain": self.epsilon_gain,
            "max_steps": self.max_steps,
            "goal_gated_acquisition": self.goal_gated_acquisition,
        }


@dataclass(frozen=True)
class Goal:
    node_id: str
    mode: str  # "confirm" | "explore"

    def to_dict(self) -> dict:
        return {"node_id": self.node_id, "mode": self.mode}


@dataclass(frozen=True)
class Recommendation:
    finding_id: str
    gain: float
    cost: float
    score: float

    def to_dict(self) -> dict:
        return {"finding_id": self.finding_id, "gain": self.gain,
                "cost": self.cost, "score": self.score}


@dataclass(frozen=True)
class StepEvent:
    kind: str
    payload: dict
    sequence: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "payload": self.payload, "sequence": self.sequence}


CONTINUE = "continue"
DONE = "done"
ALL_RESOLVED = "all_resolved"
NO_INFORMATIVE_FINDINGS = "no_informative_findings"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class StepStatus:
    state: str  # "continue" | "done"
    reason: str | None = None

    @property
    def is_done(self) -> bool:
        return self.state == DONE

    def to_dict(self) -> dict:
        return {"state": self.state, "reason": self.reason}


@dataclass
class Session:
    """One live diagnostic episode. Owned by exactly one caller at a time."""

    index: ModuleIndex
    config: EngineConfig
    evidence: EvidenceState
    active: set = field(default_factory=set)
    resolved: dict = field(default_factory=dict)  # node id -> "confirmed" | "rejected"
    goal: Goal | None = None
    step_log: list = field(default_factory=list)
    step_count: int = 0
    ever_activated: bool = False
    _log_odds_cache: dict = field(default_factory=dict)

    @property
    def module(self) -> ReKoModule:
        return self.index.module

    # -- internal helpers ---------------------------------------------------

    def _log(self, kind: str, payload: dict) -> None:
        self.step_log.append(StepEvent(kind, payload, len(self.step_log)))

    def node_log_odds(self, node_id: str) -> float:
        lo = self._log_odds_cache.get(node_id)
        if lo is None:
            lo = posterior_log_odds(self.index, node_id, self.evidence)
            self._log_odds_cache[node_id] = lo
        return lo

    def node_posterior(self, node_id: str) -> float:
        return sigmoid(self.node_log_odds(node_id))

    def _fired_trigger_nodes(self) -> set:
        fired = set()
        states = self.evidence.finding_states
        for node_id, rules in self.index.triggers_by_node.items():
            for finding_id, state in rules:
                if states.get(finding_id) == state:
                    fired.add(node_id)
                    break
        # A fired trigger forces the whole path from the root open, so the
        # target is reachable no matter how cold its ancestors score.
        for node_id in list(fired):
            fired.update(self.index.ancestors(node_id))
        return fired

    def regenerate(self) -> None:
        """Recompute hypotheses, resolution, and goal from current evidence.

        Breadth-first from the taxonomy roots: a root is opened; an opened
        link-free category always expands; any other opened node expands when
        its posterior clears tau_expand or one of its triggers fired. Expanded
        categories open their children. Opened disorders resolve (confirm or
        reject) on the tau_confirm/tau_reject thresholds or join the active
        set. Pure in (module, evidence, config), so any ingestion order of
        the same evidence lands in the same state.
        """
        index = self.index
        cfg = self.config
        fired = self._fired_trigger_nodes()

        active = set()
        resolved = {}
        frontier = list(index.roots)
        while frontier:
            node_id = frontier.pop(0)
            node = index.nodes[node_id]
            if node.kind == "category":
                if index.is_link_free_category(node_id):
                    expanded = True
                else:
                    expanded = (node_id in fired or
                                self.node_posterior(node_id) >= cfg.tau_expand)
                if expanded:
                    frontier.extend(index.children.get(node_id, ()))
                continue
            p = self.node_posterior(node_id)
            if p >= cfg.tau_confirm:
                resolved[node_id] = "confirmed"
            elif node_id in fired:
                active.add(node_id)  # a fired trigger overrides both thresholds
            elif p <= cfg.tau_reject:
                resolved[node_id] = "rejected"
            elif p >= cfg.tau_expand:
                active.add(node_id)

        old_active, old_resolved, old_goal = self.active, self.resolved, self.goal
        self.active = active
        self.resolved = resolved
        if active:
            self.ever_activated = True

        for node_id in sorted(set(old_resolved) | set(resolved)):
            if old_resolved.get(node_id) != resolved.get(node_id):
                self._log("resolved", {"node_id": node_id,
                                       "status": resolved.get(node_id)})
        if active != old_active:
            self._log("hypotheses_changed", {"active": sorted(active)})

        self.goal = self._compute_goal()
        if self.goal != old_goal:
            self._log("goal_changed", {"goal": self.goal.to_dict() if self.goal else None})

    def _compute_goal(self) -> Goal | None:
        if not self.active:
            return None
        best_id = min(self.active, key=lambda nid: (-self.node_posterior(nid), nid))
        mode = "confirm" if self.node_posterior(best_id) >= 0.5 else "explore"
        return Goal(best_id, mode)

    # -- operations ---------------------------------------------------------

    def expected_gain(self, finding_id: str) -> float:
        """Expected total entropy drop over active hypotheses from observing a finding.

        For each active node the two hypothetical posteriors are weighed by
        the node's own predictive probability of the finding. Non-negative by
        concavity; exactly zero for findings carrying no signal (s = leak).
        """
        index = self.index
        index.require_finding(finding_id)
        if finding_id in self.evidence.finding_states:
            raise AlreadyObservedError(f"finding {finding_id!r} already observed")
        leak = index.leak[finding_id]
        linked = index.links_by_finding.get(finding_id, {})
        lr_present = index.log_lr_present
        lr_absent = index.log_lr_absent
        gain = 0.0
        for node_id in sorted(self.active):
            s = linked.get(node_id)
            if s is None or s == leak:
                continue  # likelihood ratio 1: contributes exactly zero
            lo = self.node_log_odds(node_id)
            p = sigmoid(lo)
            p_hat = p * s + (1.0 - p) * leak
            key = (node_id, finding_id)
            h_present = binary_entropy(sigmoid(lo + lr_present[key]))
            h_absent = binary_entropy(sigmoid(lo + lr_absent[key]))
            gain += (binary_entropy(p)
                     - p_hat * h_present - (1.0 - p_hat) * h_absent)
        return gain

    def _candidate_findings(self) -> list[str]:
        if not self.active:
            return []
        if self.config.goal_gated_acquisition and self.goal is not None:
            pool = {self.goal.node_id}
        else:
            pool = self.active
        states = self.evidence.finding_states
        out = set()
        for node_id in pool:
            for finding_id in self.index.links_by_node.get(node_id, ()):
                if finding_id not in states:
                    out.add(finding_id)
        return sorted(out)

    def _scored_candidates(self) -> list[Recommendation]:
        recs = []
        for finding_id in self._candidate_findings():
            gain = self.expected_gain(finding_id)
            if gain < 0.0:
                gain = 0.0  # rounding guard; true gains are non-negative
            cost = self.index.cost[finding_id]
            score = gain / cost
            if score < self.config.epsilon_gain:
                continue
            recs.append(Recommendation(finding_id, gain, cost, score))
        recs.sort(key=lambda r: (-r.score, r.finding_id))
        return recs

    def recommend(self, k: int) -> list[Recommendation]:
        """Top-k next findings by expected gain per unit cost."""
        if k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")
        recs = self._scored_candidates()[:k]
        self._log("recommended", {"k": k, "items": [r.to_dict() for r in recs]})
        return recs

    def ingest(self, finding_id: str, state: str) -> "Session":
        """Record a finding's state, then rerun the cycle."""
        self.index.require_finding(finding_id)
        if state not in ("present", "absent"):
            raise ValueError(f"state must be 'present' or 'absent', got {state!r}")
        if finding_id in self.evidence.finding_states:
            raise AlreadyObservedError(f"finding {finding_id!r} already observed")
        if self.step_count >= self.config.max_steps:
            raise SessionBudgetError(
                f"step budget {self.config.max_steps} already spent")
        self.evidence.finding_states[finding_id] = state
        self._log_odds_cache.clear()
        self.step_count += 1
        self._log("finding_ingested", {"finding_id": finding_id, "state": state})
        self.regenerate()
        return self

    def status(self) -> StepStatus:
        if not self.active:
            if self.resolved or not self.ever_activated:
                return StepStatus(DONE, ALL_RESOLVED)
            return StepStatus(DONE, NO_INFORMATIVE_FINDINGS)
        if not self._scored_candidates():
            return StepStatus(DONE, NO_INFORMATIVE_FINDINGS)
        if self.step_count >= self.config.max_steps:
            return StepStatus(DONE, BUDGET_EXHAUSTED)
        return StepStatus(CONTINUE)

    def posterior_entries(self, node_ids=None) -> dict:
        """Posteriors for the given node ids (default: active plus resolved)."""
        if node_ids is None:
            node_ids = set(self.active) | set(self.resolved)
        return {nid: self.node_posterior(nid) for nid in sorted(node_ids)}

    def to_dict(self) -> dict:
        """Canonical snapshot of the whole session state."""
        return {
            "module_id": self.module.id,
            "config": self.config.to_dict(),
            "evidence": self.evidence.to_dict(),
            "active": sorted(self.active),
            "resolved": dict(sorted(self.resolved.items())),
            "goal": self.goal.to_dict() if self.goal else None,
            "step_count": self.step_count,
            "status": self.status().to_dict(),
            "step_log": [e.to_dict() for e in self.step_log],
        }


def start_session(module, config_overrides: dict | None = None,
                  initial_evidence: EvidenceState | None = None) -> Session:
    """Validate the module, merge configuration, apply evidence, run the first cycle."""
    index = ModuleIndex.of(module)
    report = validate(index.module)
    if not report.ok:
        raise InvalidModuleError(
            f"module {index.module.id!r} failed validation with "
            f"{len(report.errors)} error(s)", report=report)
    config = EngineConfig.merged(index.module.config, config_overrides)

    evidence = initial_evidence.copy() if initial_evidence else EvidenceState()
    for finding_id, state in evidence.finding_states.items():
        index.require_finding(finding_id)
        if state not in ("present", "absent"):
            raise ValueError(f"state must be 'present' or 'absent', got {state!r}")
    for key in evidence.context:
        if not key or not isinstance(key, str):
            raise ValueError(f"context attribute names must be non-empty strings, got {key!r}")

    session = Session(index=index, config=config, evidence=evidence)
    session._log("started", {
        "module_id": index.module.id,
        "config": config.to_dict(),
        "evidence": evidence.to_dict(),
    })
    session.regenerate()
    return session


# Functional aliases mirroring the operation names.

def generate_hypotheses(session: Session) -> set:
    session.regenerate()
    return set(session.active)


def set_goal(session: Session) -> Goal | None:
    return session._compute_goal()


def expected_gain(session: Session, finding_id: str) -> float:
    return session.expected_gain(finding_id)


def recommend(session: Session, k: int) -> list[Recommendation]:
    return session.recommend(k)


def ingest_finding(session: Session, finding_id: str, state: str) -> Session:
    return session.ingest(finding_id, state)


def step_status(session: Session) -> StepStatus:
    return session.status()


@dataclass
class Transcript:
    session: Session
    steps: list  # (Recommendation, answer) pairs in ask order

    def to_dict(self) -> dict:
        return {
            "session": self.session.to_dict(),
            "steps": [{"recommendation": r.to_dict(), "answer": a} for r, a in self.steps],
        }


def run_auto(session: Session, answer_oracle) -> Transcript:
    """Drive the session to termination, answering each top recommendation via the oracle."""
    steps = []
    while True:
        st = session.status()
        if st.is_done:
            session._log("terminated", {"reason": st.reason})
            break
        top = session.recommend(1)[0]
        answer = answer_oracle(top.finding_id)
        if answer not in ("present", "absent"):
            raise ValueError(
                f"oracle must answer 'present' or 'absent', got {answer!r}")
        session.ingest(top.finding_id, answer)
        steps.append((top, answer))
    return Transcript(session=session, steps=steps)
