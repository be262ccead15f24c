"""Reusable knowledge (ReKo) modules plus a generic sequential-diagnosis engine.

The knowledge lives in shareable JSON module files; the engine is generic and
runs any validated module: evidential reasoning over prior-odds times
likelihood ratios, taxonomy-driven hypothesis generation, goal setting,
cost-aware information acquisition, guard checks against glaring mistakes,
a simulator-based evaluation harness, sensitivity sweeps, and data-driven
probability refinement.
"""

from .cycle import (EngineConfig, Goal, Recommendation, Session, StepEvent,
                    StepStatus, Transcript, expected_gain, generate_hypotheses,
                    ingest_finding, recommend, run_auto, set_goal,
                    start_session, step_status)
from .errors import (AlreadyObservedError, ConfigError, EmptyInputError,
                     GenerationStuckError, InvalidModuleError, MissingPriorError,
                     ModuleParseError, RekoError, SessionBudgetError,
                     UnknownIdError)
from .guard import Verdict, check_differential
from .model import (Constraint, ContextPredicate, EvidenceState, FindingDef,
                    Link, ModuleIndex, ReKoModule, TaxonomyNode, TriggerRule,
                    ValidationIssue, ValidationReport, clamp_probability,
                    module_document, parse_module, serialize_module, validate)
from .reasoning import (ExplanationEntry, PosteriorTable, explain,
                        likelihood_ratio, posterior, posterior_log_odds,
                        posterior_table)
from .refine import RefinementConfig, RefinementReport, refine_probabilities
from .sensitivity import (PerturbationSpec, StabilityReport, perturb_module,
                          stability_sweep)
from .simulator import (AgreementReport, CaseRecord, GenConfig, evaluate,
                        finding_present_probability, generate, read_cases,
                        sample_case, write_cases)

__version__ = "0.1.0"


def load_demo_module(module_id: str) -> ReKoModule:
    """One of the bundled demo modules: 'demo_medical' or 'demo_equipment'."""
    from importlib.resources import files

    text = files("rekodx").joinpath(f"modules/{module_id}.json").read_text("utf-8")
    return parse_module(text)
