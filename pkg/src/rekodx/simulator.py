"""Synthetic ground-truth cases and gold-standard agreement measurement.

The world model is richer than the engine's scoring model on purpose: each
disorder occurs independently at its prior, and a finding turns present by
noisy-OR over the present disorders that link to it, plus its leak. Agreement
numbers therefore measure the engine against a world it does not perfectly
assume, not against itself.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from .cycle import run_auto, start_session
from .errors import EmptyInputError, GenerationStuckError, InvalidModuleError
from .model import EvidenceState, ModuleIndex, validate
from .reasoning import posterior_table

_MAX_REJECTION_ATTEMPTS = 10_000


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    true_disorders: tuple
    finding_states: dict
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "true_disorders": sorted(self.true_disorders),
            "finding_states": dict(sorted(self.finding_states.items())),
            "context": dict(sorted(self.context.items())),
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "CaseRecord":
        return cls(
            case_id=doc["case_id"],
            true_disorders=tuple(sorted(doc.get("true_disorders", ()))),
            finding_states=dict(doc.get("finding_states", {})),
            context=dict(doc.get("context", {})),
        )


@dataclass(frozen=True)
class GenConfig:
    seed: int
    n_cases: int
    require_nonempty: bool = True

    def check(self) -> None:
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.n_cases < 1:
            raise ValueError(f"n_cases must be >= 1, got {self.n_cases!r}")


@dataclass(frozen=True)
class AgreementReport:
    n_cases: int
    top1_agreement: float
    confirmed_recall: float
    mean_steps: float

    def to_dict(self) -> dict:
        return {"n_cases": self.n_cases, "top1_agreement": self.top1_agreement,
                "confirmed_recall": self.confirmed_recall, "mean_steps": self.mean_steps}


def _require_valid(module) -> ModuleIndex:
    index = ModuleIndex.of(module)
    report = validate(index.module)
    if not report.ok:
        raise InvalidModuleError(
            f"module {index.module.id!r} failed validation", report=report)
    return index


def finding_present_probability(module, finding_id: str, present_disorders) -> float:
    """Noisy-OR with leak: 1 - (1-leak) * prod over present linked disorders of (1-s)."""
    index = ModuleIndex.of(module)
    index.require_finding(finding_id)
    absent_product = 1.0 - index.leak[finding_id]
    linked = index.links_by_finding.get(finding_id, {})
    for node_id in present_disorders:
        s = linked.get(node_id)
        if s is not None:
            absent_product *= 1.0 - s
    return 1.0 - absent_product


def sample_case(module, rng: random.Random, *, require_nonempty: bool = True,
                case_id: str = "case-000000") -> CaseRecord:
    """One synthetic case: disorder truth vector, then every finding's state.

    Draw order is pinned for reproducibility: disorders in sorted id order
    (one uniform draw each, redrawing the whole vector while rejection
    sampling), then findings in sorted id order.
    """
    index = ModuleIndex.of(module)
    disorders = index.disorders
    for _ in range(_MAX_REJECTION_ATTEMPTS):
        truth = tuple(d for d in disorders if rng.random() < index.prior[d])
        if truth or not require_nonempty:
            break
    else:
        raise GenerationStuckError(
            f"no non-empty disorder vector after {_MAX_REJECTION_ATTEMPTS} attempts")
    truth_set = set(truth)
    states = {}
    for finding_id in sorted(index.findings):
        p = finding_present_probability(index, finding_id, truth_set)
        states[finding_id] = "present" if rng.random() < p else "absent"
    return CaseRecord(case_id=case_id, true_disorders=truth,
                      finding_states=states, context={})


def _child_seed(seed: int, i: int) -> int:
    """Per-case RNG stream: SHA-256 over (seed, index), first 16 bytes as an int.

    Fixing the derivation keeps any prefix or subset of a case set
    reproducible regardless of execution order.
    """
    digest = hashlib.sha256(
        seed.to_bytes(8, "big") + i.to_bytes(8, "big")).digest()
    return int.from_bytes(digest[:16], "big")


def generate(module, config: GenConfig) -> list:
    """Deterministic case list; case i depends only on (module, seed, i)."""
    config.check()
    index = _require_valid(module)
    cases = []
    for i in range(config.n_cases):
        rng = random.Random(_child_seed(config.seed, i))
        cases.append(sample_case(index, rng, require_nonempty=config.require_nonempty,
                                 case_id=f"case-{i:06d}"))
    return cases


def write_cases(cases, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(case.to_json_line() + "\n")


def read_cases(path) -> list:
    cases = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                cases.append(CaseRecord.from_dict(json.loads(line)))
    return cases


def ensure_cases_total(index: ModuleIndex, cases) -> None:
    finding_ids = set(index.findings)
    for case in cases:
        missing = finding_ids - set(case.finding_states)
        if missing:
            raise ValueError(
                f"case {case.case_id!r} does not answer findings {sorted(missing)}")


def final_top1(module, case: CaseRecord, config_overrides: dict | None = None) -> str:
    """Top-ranked disorder by posterior after auto-running a session on the case."""
    index = ModuleIndex.of(module)
    session = start_session(index, config_overrides,
                            EvidenceState({}, dict(case.context)))
    run_auto(session, lambda f: case.finding_states[f])
    table = posterior_table(index, session.evidence, index.disorders)
    return table.ranked()[0]


def evaluate(module, cases, config_overrides: dict | None = None) -> AgreementReport:
    """Run every case to termination and measure agreement with the ground truth."""
    index = _require_valid(module)
    if not cases:
        raise EmptyInputError("no cases to evaluate")
    ensure_cases_total(index, cases)

    top1_hits = 0
    true_total = 0
    confirmed_true = 0
    steps_total = 0
    for case in cases:
        session = start_session(index, config_overrides,
                                EvidenceState({}, dict(case.context)))
        run_auto(session, lambda f: case.finding_states[f])
        table = posterior_table(index, session.evidence, index.disorders)
        if table.ranked()[0] in case.true_disorders:
            top1_hits += 1
        true_total += len(case.true_disorders)
        confirmed_true += sum(1 for d in case.true_disorders
                              if session.resolved.get(d) == "confirmed")
        steps_total += session.step_count

    n = len(cases)
    return AgreementReport(
        n_cases=n,
        top1_agreement=top1_hits / n,
        confirmed_recall=(confirmed_true / true_total) if true_total else 1.0,
        mean_steps=steps_total / n,
    )
