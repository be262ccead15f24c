"""Data-driven probability refinement via equivalent-sample-size blending.

Authored values act as pseudo-observations: with weight N0 they are averaged
against the counts observed in recorded cases, so taught knowledge and
accumulated data coexist in one module. N0=0 trusts the data outright; a
large N0 barely moves. Leak estimation conditions on cases where no linked
disorder is present, the only regime where the leak is identified.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import InvalidModuleError
from .model import ModuleIndex, ReKoModule, clamp_probability, validate
from .simulator import ensure_cases_total


@dataclass(frozen=True)
class RefinementConfig:
    equivalent_sample: float = 10.0  # pseudo-observation weight of authored values

    def check(self) -> None:
        if self.equivalent_sample < 0.0:
            raise ValueError(
                f"equivalent_sample must be >= 0, got {self.equivalent_sample!r}")


@dataclass(frozen=True)
class ParameterChange:
    kind: str  # "prior" | "sensitivity" | "leak"
    target: str  # node id, "node:finding", or finding id
    before: float
    after: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target,
                "before": self.before, "after": self.after}


@dataclass(frozen=True)
class RefinementReport:
    parameters_updated: int
    max_abs_delta: float
    changes: tuple
    warnings: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "parameters_updated": self.parameters_updated,
            "max_abs_delta": self.max_abs_delta,
            "changes": [c.to_dict() for c in self.changes],
            "warnings": list(self.warnings),
        }


def _blend(n0: float, authored: float, hits: int, total: int):
    """Pseudo-count posterior mean, or None when nothing pins the value down."""
    if total == 0:
        # No observations: the blend is exactly the authored value when the
        # pseudo-count carries any weight at all. Returned untouched so a
        # refinement over zero cases is a bitwise no-op.
        return authored if n0 > 0.0 else None
    return (n0 * authored + hits) / (n0 + total)


def refine_probabilities(module: ReKoModule, cases,
                         config: RefinementConfig | None = None):
    """Blend authored probabilities with case counts; returns (module, report).

    Cases must answer every finding and carry their true disorders. The input
    module is untouched; refined values are clamped so the output re-validates
    clean.
    """
    config = config or RefinementConfig()
    config.check()
    index = ModuleIndex.of(module)
    report = validate(index.module)
    if not report.ok:
        raise InvalidModuleError(f"module {index.module.id!r} failed validation", report=report)
    ensure_cases_total(index, cases)

    n_cases = len(cases)
    disorder_count = {d: 0 for d in index.disorders}
    link_hits = {(l.node, l.finding): 0 for l in index.module.links}
    nolink_count = {f: 0 for f in index.findings}
    nolink_hits = {f: 0 for f in index.findings}

    for case in cases:
        truth = set(case.true_disorders)
        unknown = truth - set(index.disorders)
        if unknown:
            raise ValueError(
                f"case {case.case_id!r} names unknown disorders {sorted(unknown)}")
        for d in truth:
            disorder_count[d] += 1
        for finding_id in index.findings:
            present = case.finding_states[finding_id] == "present"
            linked = index.links_by_finding.get(finding_id, {})
            for node_id in linked:
                if node_id in truth and present:
                    link_hits[(node_id, finding_id)] += 1
            if not (truth & set(linked)):
                nolink_count[finding_id] += 1
                if present:
                    nolink_hits[finding_id] += 1

    n0 = config.equivalent_sample
    changes = []
    warnings = []

    def refined(kind, target, authored, hits, total):
        new = _blend(n0, authored, hits, total)
        if new is None:
            warnings.append(f"{kind} {target}: no data and N0=0; left unchanged")
            new = authored
        else:
            new = clamp_probability(min(max(new, 0.0), 1.0))
        changes.append(ParameterChange(kind, target, authored, new))
        return new

    new_nodes = []
    for node in index.module.nodes:
        if node.kind == "disorder":
            before = index.prior[node.id]
            after = refined("prior", node.id, before, disorder_count[node.id], n_cases)
            new_nodes.append(replace(node, prior=after))
        else:
            new_nodes.append(node)

    new_links = []
    for link in index.module.links:
        if link.node in disorder_count:
            before = index.links_by_node[link.node][link.finding]
            after = refined("sensitivity", f"{link.node}:{link.finding}", before,
                            link_hits[(link.node, link.finding)],
                            disorder_count[link.node])
            new_links.append(replace(link, sensitivity=after))
        else:
            new_links.append(link)  # category links have no truth labels to count

    new_findings = []
    for finding in index.module.findings:
        before = index.leak[finding.id]
        after = refined("leak", finding.id, before,
                        nolink_hits[finding.id], nolink_count[finding.id])
        new_findings.append(replace(finding, leak=after))

    refined_module = replace(index.module, nodes=tuple(new_nodes),
                             links=tuple(new_links), findings=tuple(new_findings))
    deltas = [abs(c.after - c.before) for c in changes]
    return refined_module, RefinementReport(
        parameters_updated=sum(1 for c in changes if c.after != c.before),
        max_abs_delta=max(deltas) if deltas else 0.0,
        changes=tuple(changes),
        warnings=tuple(warnings),
    )
