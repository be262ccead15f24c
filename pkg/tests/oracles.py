"""Independent oracles the engine is checked against.

These deliberately avoid the engine's code paths: the posterior oracle sums a
full joint enumeration over every finding assignment, and the gain oracle
multiplies plain odds products (no log-space accumulation).
"""

from __future__ import annotations

import math

import numpy as np

from rekodx.model import ModuleIndex


class JointOracle:
    """Full-joint brute-force posterior under the engine's two-class model.

    For one node: condition present with the clamped prior; every finding is
    conditionally independent given the condition, present with probability
    sensitivity (if linked) or leak. All 2^F finding assignments are
    enumerated once; a query sums the assignments consistent with the
    observed evidence.
    """

    def __init__(self, module):
        index = ModuleIndex.of(module)
        self.index = index
        self.finding_order = sorted(index.findings)
        f = len(self.finding_order)
        if f > 20:
            raise ValueError(f"too many findings to enumerate: {f}")
        assignments = np.arange(2 ** f, dtype=np.int64)
        self.bits = ((assignments[:, None] >> np.arange(f)) & 1).astype(np.float64)

        self.node_ids = sorted(nid for nid, p in index.prior.items() if p is not None)
        joint1 = []
        joint0 = []
        for nid in self.node_ids:
            prior = index.prior[nid]
            p1 = np.array([index.sensitivity(nid, fid)
                           if index.sensitivity(nid, fid) is not None
                           else index.leak[fid]
                           for fid in self.finding_order])
            p0 = np.array([index.leak[fid] for fid in self.finding_order])
            log1 = self.bits @ np.log(p1) + (1.0 - self.bits) @ np.log1p(-p1)
            log0 = self.bits @ np.log(p0) + (1.0 - self.bits) @ np.log1p(-p0)
            joint1.append(prior * np.exp(log1))
            joint0.append((1.0 - prior) * np.exp(log0))
        self.joint1 = np.vstack(joint1)  # (n_nodes, 2^F)
        self.joint0 = np.vstack(joint0)

    def _mask(self, finding_states: dict) -> np.ndarray:
        mask = np.ones(self.bits.shape[0], dtype=bool)
        for fid, state in finding_states.items():
            col = self.finding_order.index(fid)
            want = 1.0 if state == "present" else 0.0
            mask &= self.bits[:, col] == want
        return mask

    def posteriors(self, finding_states: dict) -> dict:
        mask = self._mask(finding_states).astype(np.float64)
        s1 = self.joint1 @ mask
        s0 = self.joint0 @ mask
        return {nid: float(s1[i] / (s1[i] + s0[i]))
                for i, nid in enumerate(self.node_ids)}

    def posterior(self, node_id: str, finding_states: dict) -> float:
        return self.posteriors(finding_states)[node_id]


def joint_posterior_py(module, node_id: str, finding_states: dict) -> float:
    """Pure-Python full-joint enumeration; for tiny modules only."""
    index = ModuleIndex.of(module)
    order = sorted(index.findings)
    prior = index.prior[node_id]
    s1 = 0.0
    s0 = 0.0
    for mask in range(2 ** len(order)):
        assign = {fid: bool(mask >> i & 1) for i, fid in enumerate(order)}
        if any((assign[fid] and state == "absent") or (not assign[fid] and state == "present")
               for fid, state in finding_states.items()):
            continue
        p_given_1 = 1.0
        p_given_0 = 1.0
        for fid in order:
            s = index.sensitivity(node_id, fid)
            p1 = s if s is not None else index.leak[fid]
            p0 = index.leak[fid]
            if assign[fid]:
                p_given_1 *= p1
                p_given_0 *= p0
            else:
                p_given_1 *= 1.0 - p1
                p_given_0 *= 1.0 - p0
        s1 += prior * p_given_1
        s0 += (1.0 - prior) * p_given_0
    return s1 / (s1 + s0)


def direct_posterior(module, node_id: str, finding_states: dict) -> float:
    """Odds-product Bayes in plain probability space (no logs)."""
    index = ModuleIndex.of(module)
    prior = index.prior[node_id]
    odds = prior / (1.0 - prior)
    for fid in sorted(finding_states):
        s = index.sensitivity(node_id, fid)
        if s is None:
            continue
        l = index.leak[fid]
        if finding_states[fid] == "present":
            odds *= s / l
        else:
            odds *= (1.0 - s) / (1.0 - l)
    return odds / (1.0 + odds)


def _entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def gain_oracle(module, finding_states: dict, active, finding_id: str) -> float:
    """Two-outcome enumeration of the expected entropy drop, summed over active nodes."""
    index = ModuleIndex.of(module)
    total = 0.0
    for node_id in sorted(active):
        p = direct_posterior(index, node_id, finding_states)
        s = index.sensitivity(node_id, finding_id)
        l = index.leak[finding_id]
        if s is None:
            s = l
        p_hat = p * s + (1.0 - p) * l
        expected = 0.0
        for state, weight in (("present", p_hat), ("absent", 1.0 - p_hat)):
            hypothetical = dict(finding_states)
            hypothetical[finding_id] = state
            expected += weight * _entropy(direct_posterior(index, node_id, hypothetical))
        total += _entropy(p) - expected
    return total


def best_recommendation_oracle(session):
    """Exhaustively score every unknown linked finding; returns the sorted list.

    Each entry is (finding_id, score). Sorting mirrors the contract: score
    descending, ties by finding id. Arithmetic stays in probability space
    (direct odds products), independent of the engine's log-space path; the
    per-node base odds are just computed once instead of per candidate.
    """
    index = session.index
    states = session.evidence.finding_states
    if session.config.goal_gated_acquisition and session.goal is not None:
        pool = {session.goal.node_id}
    else:
        pool = set(session.active)
    candidates = set()
    for node_id in pool:
        for finding_id in index.links_by_node.get(node_id, ()):
            if finding_id not in states:
                candidates.add(finding_id)

    base_odds = {}
    for node_id in sorted(session.active):
        p = direct_posterior(index, node_id, states)
        base_odds[node_id] = p / (1.0 - p)

    scored = []
    for finding_id in sorted(candidates):
        leak = index.leak[finding_id]
        gain = 0.0
        for node_id, odds in base_odds.items():
            s = index.sensitivity(node_id, finding_id)
            if s is None:
                continue  # likelihood ratio 1 on both outcomes: zero gain
            p = odds / (1.0 + odds)
            p_hat = p * s + (1.0 - p) * leak
            odds_present = odds * (s / leak)
            odds_absent = odds * ((1.0 - s) / (1.0 - leak))
            gain += (_entropy(p)
                     - p_hat * _entropy(odds_present / (1.0 + odds_present))
                     - (1.0 - p_hat) * _entropy(odds_absent / (1.0 + odds_absent)))
        gain = max(gain, 0.0)
        score = gain / index.cost[finding_id]
        if score < session.config.epsilon_gain:
            continue
        scored.append((finding_id, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored
