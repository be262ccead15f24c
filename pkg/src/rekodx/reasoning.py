"""Evidential reasoning: posteriors from prior odds times likelihood-ratio products.

Each node is scored independently against its own two-class model (condition
present vs absent): observed findings multiply the node's prior odds by a
likelihood ratio, unknown findings contribute nothing, unlinked findings
contribute exactly 1. Log likelihood ratios are summed in sorted finding-id
order so the result is bit-identical for any ingestion order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MissingPriorError
from .model import EvidenceState, ModuleIndex

_MAX_P = math.nextafter(1.0, 0.0)
_MIN_P = 5e-324


def sigmoid(log_odds: float) -> float:
    """Probability from log-odds, overflow-safe, result kept inside (0,1)."""
    if log_odds >= 0.0:
        p = 1.0 / (1.0 + math.exp(-log_odds))
    else:
        e = math.exp(log_odds)
        p = e / (1.0 + e)
    return min(max(p, _MIN_P), _MAX_P)


def log_odds(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p), in nats. Zero at the endpoints."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


@dataclass(frozen=True)
class ExplanationEntry:
    finding_id: str
    state: str
    likelihood_ratio: float
    log_lr: float

    def to_dict(self) -> dict:
        return {"finding_id": self.finding_id, "state": self.state,
                "likelihood_ratio": self.likelihood_ratio, "log_lr": self.log_lr}


@dataclass(frozen=True)
class PosteriorTable:
    entries: dict  # node id -> posterior

    def ranked(self) -> list[str]:
        """Node ids by posterior descending, ties by id ascending."""
        return [nid for nid, _ in
                sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))]


def _check_state(state: str) -> None:
    if state not in ("present", "absent"):
        raise ValueError(f"state must be 'present' or 'absent', got {state!r}")


def log_likelihood_ratio(module, node_id: str, finding_id: str, state: str) -> float:
    index = ModuleIndex.of(module)
    index.require_node(node_id)
    index.require_finding(finding_id)
    _check_state(state)
    key = (node_id, finding_id)
    if state == "present":
        return index.log_lr_present.get(key, 0.0)
    return index.log_lr_absent.get(key, 0.0)


def likelihood_ratio(module, node_id: str, finding_id: str, state: str) -> float:
    """P(finding=state | node present) / P(finding=state | node absent).

    Exactly 1 for findings not linked to the node.
    """
    index = ModuleIndex.of(module)
    index.require_node(node_id)
    index.require_finding(finding_id)
    _check_state(state)
    s = index.sensitivity(node_id, finding_id)
    if s is None:
        return 1.0
    l = index.leak[finding_id]
    if state == "present":
        return s / l
    return (1.0 - s) / (1.0 - l)


def _prior_log_odds(index: ModuleIndex, node_id: str) -> float:
    prior = index.prior.get(node_id)
    if prior is None:
        index.require_node(node_id)
        raise MissingPriorError(f"node {node_id!r} has no prior")
    return log_odds(prior)


def posterior_log_odds(module, node_id: str, evidence: EvidenceState) -> float:
    """Log-odds of the node's condition given the observed findings."""
    index = ModuleIndex.of(module)
    lo = _prior_log_odds(index, node_id)
    present = index.log_lr_present
    absent = index.log_lr_absent
    for finding_id in sorted(evidence.finding_states):
        index.require_finding(finding_id)
        state = evidence.finding_states[finding_id]
        _check_state(state)
        table = present if state == "present" else absent
        lo += table.get((node_id, finding_id), 0.0)
    return lo


def posterior(module, node_id: str, evidence: EvidenceState) -> float:
    """P(node's condition present | evidence), in (0,1)."""
    return sigmoid(posterior_log_odds(module, node_id, evidence))


def posterior_table(module, evidence: EvidenceState, node_ids=None) -> PosteriorTable:
    """Posteriors for the given nodes (default: every node that has a prior)."""
    index = ModuleIndex.of(module)
    if node_ids is None:
        node_ids = [nid for nid, p in index.prior.items() if p is not None]
    return PosteriorTable({nid: posterior(index, nid, evidence) for nid in sorted(node_ids)})


def explain(module, node_id: str, evidence: EvidenceState) -> list[ExplanationEntry]:
    """Per-finding contributions to the node's posterior.

    Covers exactly the observed findings; sorted by |log LR| descending with
    ties broken by finding id, so the strongest evidence reads first. The
    log-odds of the posterior equals the log-odds of the prior plus the sum
    of the entries' log LRs.
    """
    index = ModuleIndex.of(module)
    _prior_log_odds(index, node_id)  # raises for prior-less nodes
    entries = []
    for finding_id in sorted(evidence.finding_states):
        index.require_finding(finding_id)
        state = evidence.finding_states[finding_id]
        _check_state(state)
        table = index.log_lr_present if state == "present" else index.log_lr_absent
        log_lr = table.get((node_id, finding_id), 0.0)
        entries.append(ExplanationEntry(
            finding_id=finding_id, state=state,
            likelihood_ratio=math.exp(log_lr), log_lr=log_lr))
    entries.sort(key=lambda e: (-abs(e.log_lr), e.finding_id))
    return entries
