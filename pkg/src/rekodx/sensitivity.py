"""Multiplicative-deviation sensitivity analysis.

Every targeted probability is multiplied by a factor and clamped back into
the legal band; recorded cases are then replayed end-to-end on the perturbed
module. Stability is judged where it matters: did the top-ranked diagnosis
flip, not did any posterior move.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyInputError, InvalidModuleError
from .model import ModuleIndex, ReKoModule, perturbed_copy, validate
from .simulator import ensure_cases_total, final_top1

TARGETS = ("priors", "sensitivities", "leaks", "all")


@dataclass(frozen=True)
class PerturbationSpec:
    target: str  # "priors" | "sensitivities" | "leaks" | "all"
    lam: float

    def check(self) -> None:
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam!r}")


@dataclass(frozen=True)
class LambdaStability:
    lam: float
    cases_total: int
    top1_unchanged_count: int
    fraction_unchanged: float
    flipped_case_ids: tuple

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "cases_total": self.cases_total,
            "top1_unchanged_count": self.top1_unchanged_count,
            "fraction_unchanged": self.fraction_unchanged,
            "flipped_case_ids": list(self.flipped_case_ids),
        }


@dataclass(frozen=True)
class StabilityReport:
    grid: tuple
    per_lambda: tuple

    def to_dict(self) -> dict:
        return {"grid": list(self.grid),
                "per_lambda": [row.to_dict() for row in self.per_lambda]}


def perturb_module(module: ReKoModule, spec: PerturbationSpec) -> ReKoModule:
    """Multiply the targeted probabilities by lambda, clamped into the legal band.

    Everything untargeted is untouched; the output always re-validates with
    zero errors. At lambda=1 the output is serialization-identical for any
    module whose authored values already sit inside the clamping band.
    """
    spec.check()
    report = validate(module)
    if not report.ok:
        raise InvalidModuleError(f"module {module.id!r} failed validation", report=report)
    lam = spec.lam
    return perturbed_copy(
        module,
        prior_factor=lam if spec.target in ("priors", "all") else None,
        sensitivity_factor=lam if spec.target in ("sensitivities", "all") else None,
        leak_factor=lam if spec.target in ("leaks", "all") else None,
    )


def stability_sweep(module: ReKoModule, cases, grid, *, target: str = "all",
                    config_overrides: dict | None = None) -> StabilityReport:
    """Replay every case on every perturbed module and count top-1 flips."""
    if not grid or not cases:
        raise EmptyInputError("stability_sweep needs a non-empty grid and non-empty cases")
    index = ModuleIndex.of(module)
    report = validate(index.module)
    if not report.ok:
        raise InvalidModuleError(f"module {index.module.id!r} failed validation", report=report)
    ensure_cases_total(index, cases)

    baseline = {case.case_id: final_top1(index, case, config_overrides) for case in cases}

    rows = []
    for lam in grid:
        perturbed = perturb_module(index.module, PerturbationSpec(target, float(lam)))
        perturbed_index = ModuleIndex.of(perturbed)
        flipped = []
        for case in cases:
            top1 = final_top1(perturbed_index, case, config_overrides)
            if top1 != baseline[case.case_id]:
                flipped.append(case.case_id)
        unchanged = len(cases) - len(flipped)
        rows.append(LambdaStability(
            lam=float(lam),
            cases_total=len(cases),
            top1_unchanged_count=unchanged,
            fraction_unchanged=unchanged / len(cases),
            flipped_case_ids=tuple(flipped),
        ))
    return StabilityReport(grid=tuple(float(l) for l in grid), per_lambda=tuple(rows))
