import random

import pytest

from rekodx.errors import EmptyInputError, GenerationStuckError
from rekodx.model import FindingDef, Link, ReKoModule, TaxonomyNode
from rekodx.simulator import (CaseRecord, GenConfig, evaluate,
                              finding_present_probability, generate,
                              read_cases, sample_case, write_cases)


def single_disorder_module(prior=0.5, s=0.5, leak=0.1):
    return ReKoModule(
        id="s", name="s", version="1", domain="test",
        nodes=(TaxonomyNode(id="d", name="d", kind="disorder", prior=prior),),
        findings=(FindingDef(id="f", name="f", cost=1.0, leak=leak),),
        links=(Link(node="d", finding="f", sensitivity=s),),
        triggers=(), constraints=())


class TestNoisyOr:
    def test_leak_only(self):
        m = single_disorder_module(leak=0.1)
        assert finding_present_probability(m, "f", set()) == pytest.approx(0.1)

    def test_one_present_disorder(self):
        m = single_disorder_module(s=0.5, leak=0.1)
        assert finding_present_probability(m, "f", {"d"}) == pytest.approx(0.55)

    def test_two_disorders_compose(self):
        m = ReKoModule(
            id="s", name="s", version="1", domain="test",
            nodes=(TaxonomyNode(id="d1", name="d1", kind="disorder", prior=0.5),
                   TaxonomyNode(id="d2", name="d2", kind="disorder", prior=0.5)),
            findings=(FindingDef(id="f", name="f", cost=1.0, leak=0.1),),
            links=(Link(node="d1", finding="f", sensitivity=0.5),
                   Link(node="d2", finding="f", sensitivity=0.4)),
            triggers=(), constraints=())
        expected = 1 - 0.9 * 0.5 * 0.6
        assert finding_present_probability(m, "f", {"d1", "d2"}) == pytest.approx(expected)

    def test_empirical_frequency_matches(self):
        m = single_disorder_module(prior=0.4, s=0.5, leak=0.1)
        rng = random.Random(99)
        hits = sum(sample_case(m, rng, require_nonempty=False).finding_states["f"] == "present"
                   for _ in range(20000))
        # P(present) = 0.4*0.55 + 0.6*0.1 = 0.28
        assert hits / 20000 == pytest.approx(0.28, abs=0.01)


class TestSampling:
    def test_same_seed_same_sequence(self, med_module):
        a = generate(med_module, GenConfig(seed=7, n_cases=20))
        b = generate(med_module, GenConfig(seed=7, n_cases=20))
        assert [c.to_dict() for c in a] == [c.to_dict() for c in b]

    def test_different_seeds_differ(self, med_module):
        a = generate(med_module, GenConfig(seed=7, n_cases=5))
        b = generate(med_module, GenConfig(seed=8, n_cases=5))
        assert [c.to_dict() for c in a] != [c.to_dict() for c in b]

    def test_prefix_property(self, med_module):
        small = generate(med_module, GenConfig(seed=42, n_cases=10))
        large = generate(med_module, GenConfig(seed=42, n_cases=100))
        assert [c.to_dict() for c in small] == [c.to_dict() for c in large[:10]]

    def test_require_nonempty_guarantees_truth(self, med_module):
        for case in generate(med_module, GenConfig(seed=3, n_cases=50)):
            assert case.true_disorders

    def test_finding_states_total(self, med_index):
        cases = generate(med_index, GenConfig(seed=3, n_cases=5))
        for case in cases:
            assert set(case.finding_states) == set(med_index.findings)

    def test_n_cases_zero_rejected(self, med_module):
        with pytest.raises(ValueError):
            generate(med_module, GenConfig(seed=1, n_cases=0))

    def test_generation_stuck_on_degenerate_module(self):
        # clamped floor prior makes a non-empty draw essentially impossible
        m = single_disorder_module(prior=0.0)
        with pytest.raises(GenerationStuckError):
            sample_case(m, random.Random(1), require_nonempty=True)

    def test_golden_first_cases(self, med_module, goldens):
        first_42 = generate(med_module, GenConfig(seed=42, n_cases=1))[0]
        first_43 = generate(med_module, GenConfig(seed=43, n_cases=1))[0]
        assert first_42.to_dict() == goldens["simulator"]["first_case_seed42"]
        assert first_43.to_dict() == goldens["simulator"]["first_case_seed43"]


class TestCaseIO:
    def test_round_trip(self, med_module, tmp_path):
        cases = generate(med_module, GenConfig(seed=5, n_cases=8))
        path = tmp_path / "cases.jsonl"
        write_cases(cases, path)
        back = read_cases(path)
        assert [c.to_dict() for c in back] == [c.to_dict() for c in cases]
        # one sorted-keys JSON object per line
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 8


class TestEvaluate:
    def test_decisive_single_disorder_is_always_right(self):
        m = single_disorder_module(prior=0.5, s=0.99, leak=0.01)
        cases = generate(m, GenConfig(seed=11, n_cases=40))
        report = evaluate(m, cases)
        assert report.top1_agreement == 1.0

    def test_zero_gain_world_asks_nothing(self):
        m = single_disorder_module(prior=0.5, s=0.1, leak=0.1)
        cases = generate(m, GenConfig(seed=11, n_cases=10))
        report = evaluate(m, cases)
        assert report.mean_steps == 0.0

    def test_empty_cases_rejected(self, med_module):
        with pytest.raises(EmptyInputError):
            evaluate(med_module, [])

    def test_partial_case_rejected(self, med_module):
        case = CaseRecord(case_id="x", true_disorders=("influenza",),
                          finding_states={"fever": "present"})
        with pytest.raises(ValueError):
            evaluate(med_module, [case])
