"""Acceptance suite: every exit criterion at its stated tolerance.

Each test registers a PASS/FAIL line printed in the terminal summary.
"""

import json
import random
import shutil
import time
from pathlib import Path

from conftest import record_acceptance
from genmod import random_evidence, random_module
from oracles import JointOracle, best_recommendation_oracle, gain_oracle
from rekodx.cli import main as cli_main
from rekodx.cycle import start_session
from rekodx.guard import check_differential
from rekodx.model import (EvidenceState, FindingDef, Link, ModuleIndex,
                          ReKoModule, TaxonomyNode)
from rekodx.refine import RefinementConfig, refine_probabilities
from rekodx.sensitivity import stability_sweep
from rekodx.simulator import GenConfig, evaluate, generate
from rekodx.store import ModuleRegistry, SessionStore

MODULE_DIR = Path(__file__).parents[1] / "src" / "rekodx" / "modules"


def bundled_modules():
    from rekodx import load_demo_module
    return [load_demo_module(p.stem) for p in sorted(MODULE_DIR.glob("*.json"))]


def test_oracle_equivalence():
    """Engine posteriors match full-joint enumeration within 1e-9, under 10 s."""
    started = time.perf_counter()
    rng = random.Random(20240801)
    checked = 0
    worst = 0.0
    from rekodx.reasoning import posterior

    for module in bundled_modules():
        index = ModuleIndex(module)
        if len(index.disorders) > 10 or len(index.findings) > 15:
            continue
        oracle = JointOracle(index)
        for _ in range(1000):
            states = random_evidence(rng, module)
            expected = oracle.posteriors(states)
            evidence = EvidenceState(states)
            for node_id, want in expected.items():
                got = posterior(index, node_id, evidence)
                worst = max(worst, abs(got - want))
                checked += 1
    elapsed = time.perf_counter() - started
    ok = checked > 0 and worst <= 1e-9 and elapsed < 10.0
    record_acceptance("oracle equivalence (full-joint brute force, 1e-9)", ok,
                      f"{checked} posteriors, worst |diff| {worst:.2e}, {elapsed:.1f}s")
    assert checked > 0
    assert worst <= 1e-9
    assert elapsed < 10.0


def test_order_invariance():
    """500 random (module, evidence, permutation) triples land in identical states."""
    rng = random.Random(99112)
    worst = 0.0
    for trial in range(500):
        module = random_module(rng, module_id=f"inv{trial}")
        index = ModuleIndex(module)
        states = random_evidence(rng, module, p_observed=0.7)
        items = list(states.items())
        finals = []
        for _ in range(2):
            rng.shuffle(items)
            session = start_session(index)
            for finding_id, state in items:
                session.ingest(finding_id, state)
            finals.append(session)
        a, b = finals
        assert a.active == b.active, trial
        assert a.resolved == b.resolved, trial
        for node_id in index.disorders:
            diff = abs(a.node_posterior(node_id) - b.node_posterior(node_id))
            worst = max(worst, diff)
            assert diff <= 1e-12, trial
    record_acceptance("order invariance (500 permuted ingestion orders)", True,
                      f"worst posterior diff {worst:.2e}")


def test_recommendation_optimality():
    """At every step of 200 simulated sessions the top pick is the exhaustive best."""
    rng = random.Random(777)
    sessions = 0
    steps_checked = 0
    for module in bundled_modules():
        index = ModuleIndex(module)
        cases = generate(index, GenConfig(seed=1234, n_cases=100))
        for case in cases:
            session = start_session(index)
            sessions += 1
            while True:
                status = session.status()
                if status.is_done:
                    break
                oracle = best_recommendation_oracle(session)
                recs = session.recommend(max(len(oracle), 1))
                assert len(recs) == len(oracle), (module.id, case.case_id)
                # scores agree with the oracle's exhaustive rescoring pairwise
                assert _scores_match(recs, oracle), (module.id, case.case_id)
                top = recs[0]
                best_score = oracle[0][1]
                assert abs(top.score - best_score) <= 1e-9
                near = {fid for fid, sc in oracle if sc >= best_score - 1e-9}
                assert top.finding_id in near
                # the list is ordered by score descending with exact float
                # ties broken by finding id ascending
                for earlier, later in zip(recs, recs[1:]):
                    assert earlier.score >= later.score
                    if earlier.score == later.score:
                        assert earlier.finding_id < later.finding_id
                steps_checked += 1
                session.ingest(top.finding_id, case.finding_states[top.finding_id])
    record_acceptance("recommendation optimality (exhaustive rescoring)", True,
                      f"{sessions} sessions, {steps_checked} steps")
    assert sessions == 200


def _scores_match(recs, oracle):
    if len(recs) != len(oracle):
        return False
    return all(abs(r.score - sc) <= 1e-9 for r, (_, sc) in zip(recs, oracle))


def test_gain_properties():
    """Non-negative, exactly zero for no-signal findings, equals enumeration to 1e-9."""
    rng = random.Random(5150)

    # exactly zero when sensitivity equals leak for every active hypothesis
    for leak in (0.05, 0.2, 0.5):
        module = ReKoModule(
            id="flat", name="flat", version="1", domain="t",
            nodes=(TaxonomyNode(id="d1", name="d1", kind="disorder", prior=0.3),
                   TaxonomyNode(id="d2", name="d2", kind="disorder", prior=0.2)),
            findings=(FindingDef(id="f", name="f", cost=1.0, leak=leak),),
            links=(Link(node="d1", finding="f", sensitivity=leak),
                   Link(node="d2", finding="f", sensitivity=leak)),
            triggers=(), constraints=())
        session = start_session(module)
        assert session.expected_gain("f") == 0.0

    # never below -1e-12, and equal to the two-outcome enumeration
    worst_negative = 0.0
    worst_diff = 0.0
    instances = 0
    while instances < 1000:
        prior = rng.uniform(0.01, 0.95)
        n_findings = rng.randint(1, 6)
        findings = tuple(FindingDef(id=f"f{j}", name=f"f{j}", cost=1.0,
                                    leak=round(rng.uniform(0.01, 0.5), 6))
                         for j in range(n_findings))
        links = tuple(Link(node="d", finding=f.id,
                           sensitivity=round(rng.uniform(0.01, 0.97), 6))
                      for f in findings if rng.random() < 0.8)
        if not links:
            continue
        module = ReKoModule(
            id="one", name="one", version="1", domain="t",
            nodes=(TaxonomyNode(id="d", name="d", kind="disorder", prior=prior),),
            findings=findings, links=links, triggers=(), constraints=())
        session = start_session(module, {"tau_expand": 0.005, "tau_reject": 0.001})
        if session.active != {"d"}:
            continue
        observed = {f.id: rng.choice(("present", "absent"))
                    for f in findings[1:] if rng.random() < 0.5}
        for fid, state in observed.items():
            session.ingest(fid, state)
        if session.active != {"d"}:
            continue
        target = findings[0].id
        if target in session.evidence.finding_states:
            continue
        gain = session.expected_gain(target)
        worst_negative = min(worst_negative, gain)
        expected = gain_oracle(session.index, session.evidence.finding_states,
                               session.active, target)
        worst_diff = max(worst_diff, abs(gain - expected))
        instances += 1
    ok = worst_negative >= -1e-12 and worst_diff <= 1e-9
    record_acceptance("expected-gain properties (1000 single-hypothesis checks)", ok,
                      f"min gain {worst_negative:.2e}, worst |diff| {worst_diff:.2e}")
    assert worst_negative >= -1e-12
    assert worst_diff <= 1e-9


def test_simulator_agreement(goldens):
    """Demo medical module, seed 42, 1000 cases: top-1 in truth at least 85%."""
    from rekodx import load_demo_module
    module = load_demo_module("demo_medical")
    started = time.perf_counter()
    cases = generate(module, GenConfig(seed=42, n_cases=1000))
    report = evaluate(module, cases)
    elapsed = time.perf_counter() - started
    pinned = goldens["agreement"]["demo_medical"]
    ok = (report.top1_agreement >= 0.85 and elapsed < 60.0
          and report.to_dict() == pinned)
    record_acceptance("simulator agreement (seed 42, 1000 cases, >= 0.85)", ok,
                      f"top1 {report.top1_agreement:.3f}, {elapsed:.1f}s")
    assert report.top1_agreement >= 0.85
    assert elapsed < 60.0
    assert report.to_dict() == pinned, "measured agreement drifted from pinned golden"


def test_sensitivity_identity_and_tolerance(goldens):
    """Identity row exact; perturbed rows match the pinned measured values."""
    from rekodx import load_demo_module
    module = load_demo_module("demo_medical")
    pin = goldens["sensitivity"]
    cases = generate(module, GenConfig(seed=pin["seed"], n_cases=pin["n_cases"]))
    report = stability_sweep(module, cases, [0.5, 1.0, 2.0])
    rows = {row.lam: row for row in report.per_lambda}
    identity_exact = rows[1.0].fraction_unchanged == 1.0
    match = all(rows[float(lam)].fraction_unchanged == frac
                for lam, frac in pin["fractions"].items())
    record_acceptance("sensitivity identity + pinned tolerance rows", identity_exact and match,
                      f"fractions {{0.5: {rows[0.5].fraction_unchanged}, "
                      f"1.0: {rows[1.0].fraction_unchanged}, "
                      f"2.0: {rows[2.0].fraction_unchanged}}}")
    assert identity_exact
    assert match


GUARD_CONTRADICTIONS = [
    # (module id, evidence findings, context, node expected vetoed)
    ("demo_medical", {}, {"sex": "male"}, "ectopic_pregnancy"),
    ("demo_medical", {"fever": "present"}, {"sex": "male", "age": 40}, "ectopic_pregnancy"),
    ("demo_medical", {}, {"sex": "female", "age": 72}, "ectopic_pregnancy"),
    ("demo_medical", {"positive_pregnancy_test": "absent"}, {"sex": "female"},
     "ectopic_pregnancy"),
    ("demo_medical", {}, {"prior_appendectomy": True}, "appendicitis"),
    ("demo_equipment", {}, {"cooling_type": "air"}, "coolant_leak"),
]

GUARD_CLEAN = [
    ("demo_medical", {}, {"sex": "female", "age": 30}),
    ("demo_medical", {"positive_pregnancy_test": "present"}, {"sex": "female", "age": 25}),
    ("demo_medical", {"fever": "present"}, {"prior_appendectomy": False, "age": 40}),
    ("demo_equipment", {}, {"cooling_type": "cryogen"}),
    ("demo_equipment", {"image_snr_low": "present"}, {"board_age_days": 400}),
]


def test_guard_contradiction_suite():
    """Crafted contradictions veto 100%; clean cases never veto; always a subsequence."""
    from rekodx import load_demo_module
    modules = {m.id: ModuleIndex(m) for m in bundled_modules()}
    vetoes = 0
    for module_id, findings, context, target in GUARD_CONTRADICTIONS:
        index = modules[module_id]
        evidence = EvidenceState(dict(findings), dict(context))
        ranking = list(index.disorders)
        guarded, verdicts = check_differential(index, evidence, ranking)
        positions = [ranking.index(n) for n in guarded]
        assert positions == sorted(positions)
        assert target not in guarded, (module_id, context)
        assert any(v.node_id == target and v.outcome == "veto" for v in verdicts)
        vetoes += 1
    for module_id, findings, context in GUARD_CLEAN:
        index = modules[module_id]
        evidence = EvidenceState(dict(findings), dict(context))
        ranking = list(index.disorders)
        guarded, verdicts = check_differential(index, evidence, ranking)
        assert guarded == ranking, (module_id, context)
        assert not any(v.outcome == "veto" for v in verdicts)
    record_acceptance("guard vetoes (contradiction suite 100%, clean suite 0%)", True,
                      f"{vetoes} contradiction cases, {len(GUARD_CLEAN)} clean cases")
    assert vetoes >= 5


def test_cross_domain_separation(capsys, tmp_path):
    """One engine build drives both demo domains through the same CLI path."""
    outcomes = {}
    for module_path in sorted(MODULE_DIR.glob("*.json")):
        cases_path = tmp_path / f"{module_path.stem}.jsonl"
        assert cli_main(["validate", str(module_path)]) == 0
        capsys.readouterr()
        assert cli_main(["simulate", "--module", str(module_path),
                         "--cases", "80", "--seed", "21",
                         "--out", str(cases_path)]) == 0
        capsys.readouterr()
        assert cli_main(["evaluate", "--module", str(module_path),
                         "--cases", str(cases_path)]) == 0
        report = json.loads(capsys.readouterr().out)
        outcomes[module_path.stem] = report["top1_agreement"]
    record_acceptance("cross-domain separation (medicine + equipment via CLI)", True,
                      f"agreement {outcomes}")
    assert set(outcomes) == {"demo_medical", "demo_equipment"}


def test_refinement_properties():
    """N0=0 recovers frequencies; convexity + monotone trust on 1000 fixtures."""
    from test_refine import counting_module, make_cases

    # exact frequencies at N0=0
    module = counting_module(prior=0.3, s=0.5, leak=0.1)
    cases = make_cases(100, d_present=40, f_present_given_d=30, f_present_given_not_d=9)
    refined, _ = refine_probabilities(module, cases, RefinementConfig(0.0))
    index = ModuleIndex(refined)
    assert index.links_by_node["d"]["f"] == 0.75
    assert index.prior["d"] == 0.4
    assert index.leak["f"] == 0.15

    rng = random.Random(31337)
    fixtures = 0
    while fixtures < 1000:
        prior = rng.uniform(0.02, 0.7)
        s = rng.uniform(0.05, 0.95)
        leak = rng.uniform(0.01, 0.5)
        n = rng.randint(3, 40)
        d_present = rng.randint(1, n)
        module = counting_module(prior=prior, s=s, leak=leak)
        cases = make_cases(n, d_present, rng.randint(0, d_present),
                           rng.randint(0, n - d_present) if n > d_present else 0)
        empirical_s = sum(1 for c in cases if c.true_disorders
                          and c.finding_states["f"] == "present") / d_present
        values = {}
        for n0 in (0.0, 4.0, 40.0):
            out, _ = refine_probabilities(module, cases, RefinementConfig(n0))
            values[n0] = ModuleIndex(out).links_by_node["d"]["f"]
        lo, hi = sorted((s, empirical_s))
        clamped_lo, clamped_hi = max(lo, 1e-6), max(hi, 1e-6)
        for n0 in values:
            assert clamped_lo - 1e-9 <= values[n0] <= clamped_hi + 1e-9
        if abs(empirical_s - s) > 1e-9:
            assert abs(values[40.0] - s) < abs(values[4.0] - s) + 1e-12
            assert abs(values[4.0] - s) < abs(values[0.0] - s) + 1e-12
        fixtures += 1

    # large-sample convergence on the analytically known single-disorder case
    module = counting_module(prior=0.5, s=0.6, leak=1e-6)
    cases = generate(module, GenConfig(seed=4242, n_cases=10000))
    refined, _ = refine_probabilities(module, cases, RefinementConfig(10.0))
    refined_s = ModuleIndex(refined).links_by_node["d"]["f"]
    converged = abs(refined_s - 0.6) <= 0.02
    record_acceptance("refinement (exact counts, convexity, monotone trust, convergence)",
                      converged, f"1000 fixtures; large-sample s {refined_s:.4f} vs 0.6")
    assert converged


def test_crash_replay():
    """100 randomized kill points replay to the exact acknowledged state."""
    registry, _ = ModuleRegistry.load_dir(MODULE_DIR)
    rng = random.Random(909090)

    import tempfile
    workdir = Path(tempfile.mkdtemp(prefix="replay"))
    live_dir = workdir / "live"
    store = SessionStore(registry, live_dir)

    med_findings = sorted(registry.get("demo_medical").findings)
    equip_findings = sorted(registry.get("demo_equipment").findings)

    sessions = []
    snapshots = []  # after each op: {session_id: state dict or None if closed}
    lengths = []  # after each op: {filename: byte length}

    def snap():
        state = {}
        for sid, closed in sessions:
            state[sid] = None if closed else store.get(sid).to_dict()
        snapshots.append(state)
        sizes = {}
        for path in live_dir.glob("*.jsonl"):
            sizes[path.name] = path.stat().st_size
        lengths.append(sizes)

    ops = 0
    for spec in (("demo_medical", med_findings), ("demo_equipment", equip_findings),
                 ("demo_medical", med_findings)):
        module_id, findings = spec
        sid, _ = store.create(module_id, {},
                              {"sex": rng.choice(("male", "female"))})
        sessions.append((sid, False))
        snap()
        ops += 1
        for finding in rng.sample(findings, 6):
            roll = rng.random()
            if roll < 0.25:
                store.recommendations(sid, rng.randint(1, 4))
            else:
                store.ingest(sid, finding, rng.choice(("present", "absent")))
            snap()
            ops += 1
    # close the middle session
    sid_mid = sessions[1][0]
    store.close(sid_mid)
    sessions[1] = (sid_mid, True)
    snap()
    ops += 1

    final_bytes = {p.name: p.read_bytes() for p in live_dir.glob("*.jsonl")}

    failures = 0
    for trial in range(100):
        kill_at = rng.randrange(ops)
        torn = rng.random() < 0.4
        replay_dir = workdir / f"kill{trial}"
        replay_dir.mkdir()
        for name, size in lengths[kill_at].items():
            data = final_bytes[name][:size]
            if torn and len(final_bytes[name]) > size:
                extra = rng.randint(1, min(20, len(final_bytes[name]) - size))
                fragment = final_bytes[name][size:size + extra]
                if not fragment.endswith(b"\n"):
                    data += fragment  # torn tail: no trailing newline, unacknowledged
            (replay_dir / name).write_bytes(data)
        replayed = SessionStore(registry, replay_dir)
        for sid, state in snapshots[kill_at].items():
            if state is None:
                try:
                    replayed.get(sid)
                    failures += 1
                except Exception:
                    pass
            else:
                if replayed.get(sid).to_dict() != state:
                    failures += 1
        shutil.rmtree(replay_dir)
    shutil.rmtree(workdir)
    record_acceptance("crash replay (100 randomized kill points)", failures == 0,
                      f"{ops} acknowledged ops, {failures} mismatches")
    assert failures == 0
