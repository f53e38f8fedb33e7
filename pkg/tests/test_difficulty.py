import json
import math
import random

import pytest

from ugcs import (
    DifficultyMetric,
    MetricKind,
    anll,
    consistency_score,
    consistency_table,
    load_score_table,
    nll,
    sample_difficulty,
)
from ugcs.errors import (
    MissingPrecomputedScoreError,
    SchemaError,
    TooFewGenerationsError,
)

from conftest import make_record


class TestAnll:
    def test_certainty_is_zero(self):
        rec = make_record(token_logprobs=[0.0, 0.0, 0.0])
        assert anll(rec) == 0.0
        assert math.copysign(1.0, anll(rec)) == 1.0  # not -0.0

    def test_two_token_example(self):
        assert anll(make_record(token_logprobs=[-1.0, -3.0])) == 2.0

    def test_sum_evidence(self):
        rec = make_record(sum_logprob=-12.0, num_tokens=8)
        assert anll(rec) == 1.5

    def test_evidence_equivalence_over_random_vectors(self):
        rng = random.Random(17)
        for _ in range(300):
            t = rng.randint(1, 12)
            logps = [-rng.random() * 4 for _ in range(t)]
            by_tokens = anll(make_record(token_logprobs=logps))
            by_sum = anll(make_record(sum_logprob=sum(logps), num_tokens=t))
            assert abs(by_tokens - by_sum) <= 1e-12 * max(1.0, abs(by_tokens))

    def test_depends_only_on_total_and_length(self):
        a = make_record(token_logprobs=[-3.0, -1.0, 0.0])
        b = make_record(token_logprobs=[-2.0, -1.0, -1.0])
        assert anll(a) == anll(b)

    def test_strictly_decreasing_in_total_logprob(self):
        values = [anll(make_record(sum_logprob=s, num_tokens=4))
                  for s in (-8.0, -6.0, -4.0, -2.0, 0.0)]
        assert values == sorted(values, reverse=True)
        assert len(set(values)) == len(values)


class TestNll:
    def test_negated_sum(self):
        assert nll(make_record(token_logprobs=[-1.0, -3.0])) == 4.0

    def test_length_one_equals_anll(self):
        rec = make_record(token_logprobs=[-2.5])
        assert nll(rec) == anll(rec)

    def test_identity_with_anll(self):
        rng = random.Random(23)
        for _ in range(500):
            t = rng.randint(1, 20)
            rec = make_record(token_logprobs=[-rng.random() * 3 for _ in range(t)])
            assert nll(rec) == anll(rec) * t


class TestConsistency:
    def test_no_variance(self):
        assert consistency_score([1, 1, 1, 1]) == 0.0

    def test_even_split_maximal(self):
        assert consistency_score([1, 0, 1, 0]) == 0.25

    def test_five_of_eight(self):
        assert consistency_score([1, 1, 0, 1, 0, 0, 0, 1]) == 0.25
        assert consistency_score([1, 1, 0, 1, 0, 1, 0, 1]) == 0.234375

    def test_too_few(self):
        with pytest.raises(TooFewGenerationsError):
            consistency_score([1])

    def test_non_binary(self):
        with pytest.raises(ValueError):
            consistency_score([1, 2])

    def test_range(self):
        rng = random.Random(5)
        for _ in range(200):
            bits = [rng.randint(0, 1) for _ in range(rng.randint(2, 16))]
            assert 0.0 <= consistency_score(bits) <= 0.25


class TestSampleDifficulty:
    def test_on_the_fly_mean(self):
        answers = [make_record(1, "q", 0, sum_logprob=-2.0, num_tokens=1),
                   make_record(1, "q", 1, sum_logprob=-4.0, num_tokens=1)]
        value = sample_difficulty((1, "q"), answers, DifficultyMetric.anll_metric())
        assert value == 3.0

    def test_precomputed_static_lookup(self):
        metric = DifficultyMetric.precomputed(MetricKind.PRE_ANLL, {"q7": 5.5})
        for step in (1, 500, 1000):
            assert sample_difficulty((step, "q7"), [], metric) == 5.5

    def test_precomputed_missing_sample(self):
        metric = DifficultyMetric.precomputed(MetricKind.PRE_NLL, {"q7": 5.5})
        with pytest.raises(MissingPrecomputedScoreError):
            sample_difficulty((1, "other"), [], metric)

    def test_consistency_table_matches_oracle(self):
        rng = random.Random(31)
        fixture = {f"q{i}": [rng.randint(0, 1) for _ in range(8)] for i in range(40)}
        table = consistency_table(fixture)
        for sid, bits in fixture.items():
            q = sum(bits) / len(bits)
            assert table[sid] == q * (1 - q)
        metric = DifficultyMetric.precomputed(MetricKind.PRE_CONSISTENCY, table)
        for sid in fixture:
            assert sample_difficulty((3, sid), [], metric) == table[sid]


class TestMetricConfig:
    def test_on_the_fly_rejects_table(self):
        with pytest.raises(SchemaError):
            DifficultyMetric(MetricKind.ANLL, {"q": 1.0})

    def test_precomputed_requires_table(self):
        with pytest.raises(SchemaError):
            DifficultyMetric(MetricKind.PRE_ANLL)

    def test_kind_flags(self):
        assert MetricKind.ANLL.is_on_the_fly
        assert MetricKind.NLL.is_on_the_fly
        assert not MetricKind.PRE_CONSISTENCY.is_on_the_fly


class TestScoreTableIO:
    def test_load(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text(json.dumps({"a": 1.5, "b": 2}))
        assert load_score_table(path) == {"a": 1.5, "b": 2.0}

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text("[1, 2]")
        with pytest.raises(SchemaError):
            load_score_table(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text(json.dumps({"a": "hard"}))
        with pytest.raises(SchemaError):
            load_score_table(path)
