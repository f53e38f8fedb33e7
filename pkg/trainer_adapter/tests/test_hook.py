import json
import logging
import math
import random

import pytest

from ugcs_hook import HookConfig, TrainingLogHook, write_manifest


def mock_batch(rng, config, pool=500, max_tokens=12):
    batch = []
    for q in rng.sample(range(pool), config.batch_size):
        answers = []
        for _ in range(config.n_per_question):
            t = rng.randint(1, max_tokens)
            answers.append({
                "reward": float(rng.random() < 0.5),
                "token_logprobs": [-rng.random() * 3 for _ in range(t)],
            })
        batch.append((f"q{q:05d}", answers))
    return batch


class TestConfig:
    def test_validation(self, tmp_path):
        with pytest.raises(ValueError):
            HookConfig(tmp_path / "log", flush_every=0)
        with pytest.raises(ValueError):
            HookConfig(tmp_path / "log", evidence_mode="logits")
        with pytest.raises(ValueError):
            HookConfig(tmp_path / "log", logprob_phase="mid_update")


class TestOnStep:
    def test_line_count_per_step(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson", n_per_question=8, batch_size=8)
        rng = random.Random(1)
        with TrainingLogHook(config) as hook:
            appended = hook.on_step(1, mock_batch(rng, config))
        assert appended == 64
        lines = (tmp_path / "log.ndjson").read_text().splitlines()
        assert len(lines) == 64

    def test_schema_fields_and_indices(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson", n_per_question=3, batch_size=2)
        rng = random.Random(2)
        with TrainingLogHook(config) as hook:
            hook.on_step(5, mock_batch(rng, config))
        lines = [json.loads(l) for l in (tmp_path / "log.ndjson").read_text().splitlines()]
        assert all(set(obj) == {"step", "sample_id", "answer_index", "reward",
                                "num_tokens", "token_logprobs"} for obj in lines)
        assert all(obj["step"] == 5 for obj in lines)
        assert [obj["answer_index"] for obj in lines] == [0, 1, 2, 0, 1, 2]
        assert all(len(obj["token_logprobs"]) == obj["num_tokens"] for obj in lines)

    def test_sum_mode_collapses_evidence(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson", evidence_mode="sum_logprob",
                            n_per_question=2, batch_size=1)
        batch = [("q1", [
            {"reward": 1.0, "token_logprobs": [-1.0, -2.0]},
            {"reward": 0.0, "sum_logprob": -7.5, "num_tokens": 3},
        ])]
        with TrainingLogHook(config) as hook:
            hook.on_step(1, batch)
        lines = [json.loads(l) for l in (tmp_path / "log.ndjson").read_text().splitlines()]
        assert lines[0]["sum_logprob"] == -3.0
        assert lines[1]["sum_logprob"] == -7.5
        assert all("token_logprobs" not in obj for obj in lines)

    def test_tuple_answers(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson", n_per_question=2, batch_size=1)
        with TrainingLogHook(config) as hook:
            hook.on_step(1, [("q", [(1.0, [-0.5, -0.25]), (0.0, [-2.0])])])
        lines = [json.loads(l) for l in (tmp_path / "log.ndjson").read_text().splitlines()]
        assert lines[0]["token_logprobs"] == [-0.5, -0.25]

    def test_token_mode_requires_tokens(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson")
        with TrainingLogHook(config) as hook:
            with pytest.raises(ValueError):
                hook.on_step(1, [("q", [{"reward": 1.0, "sum_logprob": -1.0,
                                         "num_tokens": 4}])])

    def test_invalid_answers(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson")
        hook = TrainingLogHook(config)
        with pytest.raises(ValueError):
            hook.on_step(1, [("q", [{"reward": 1.0}])])
        with pytest.raises(ValueError):
            hook.on_step(0, [])

    def test_float_fidelity(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson", n_per_question=1, batch_size=1)
        value = -0.1234567890123456789
        with TrainingLogHook(config) as hook:
            hook.on_step(1, [("q", [{"reward": 1 / 3, "token_logprobs": [value]}])])
        obj = json.loads((tmp_path / "log.ndjson").read_text())
        assert obj["token_logprobs"][0] == float(value)
        assert obj["reward"] == 1 / 3


class TestBuffering:
    def test_flush_interval(self, tmp_path):
        path = tmp_path / "log.ndjson"
        config = HookConfig(path, flush_every=5, n_per_question=1, batch_size=1)
        rng = random.Random(3)
        hook = TrainingLogHook(config)
        for step in range(1, 5):
            hook.on_step(step, mock_batch(rng, config))
            assert not path.exists()
        hook.on_step(5, mock_batch(rng, config))
        assert len(path.read_text().splitlines()) == 5
        hook.close()

    def test_io_errors_warn_but_never_raise(self, tmp_path, caplog):
        config = HookConfig(tmp_path / "nodir" / "log.ndjson", max_retries=2,
                            retry_backoff_s=0.0, n_per_question=1, batch_size=1)
        hook = TrainingLogHook(config)
        rng = random.Random(4)
        with caplog.at_level(logging.WARNING, logger="ugcs_hook.hook"):
            hook.on_step(1, mock_batch(rng, config))  # flush fails, silently kept
        assert any("flush attempt" in r.message for r in caplog.records)
        # the directory appears; the buffered line lands on the next flush
        (tmp_path / "nodir").mkdir()
        hook.flush()
        assert len((tmp_path / "nodir" / "log.ndjson").read_text().splitlines()) == 1

    def test_buffer_cap_drops_oldest(self, tmp_path, caplog):
        config = HookConfig(tmp_path / "nodir" / "log.ndjson", max_retries=1,
                            retry_backoff_s=0.0, n_per_question=1, batch_size=1,
                            max_buffered_lines=3)
        hook = TrainingLogHook(config)
        rng = random.Random(5)
        with caplog.at_level(logging.WARNING, logger="ugcs_hook.hook"):
            for step in range(1, 6):
                hook.on_step(step, mock_batch(rng, config))
        assert hook.lines_dropped > 0


class TestManifest:
    def test_defaults_echo_training_recipe(self, tmp_path):
        config = HookConfig(tmp_path / "log.ndjson")
        write_manifest(config, tmp_path / "manifest.json")
        obj = json.loads((tmp_path / "manifest.json").read_text())
        assert obj["n_per_question"] == 8
        assert obj["batch_size"] == 8
        assert obj["total_steps"] == 1000
        assert obj["save_every"] == 100
        assert obj["max_response_len"] == 1200
        assert obj["logprob_phase"] == "post_update"

    def test_parses_as_run_manifest(self, tmp_path):
        from ugcs import load_manifest

        config = HookConfig(tmp_path / "log.ndjson", total_steps=60, save_every=20)
        write_manifest(config, tmp_path / "manifest.json", checkpoint_steps=(20, 60))
        manifest = load_manifest(tmp_path / "manifest.json")
        assert manifest.total_steps == 60
        assert manifest.checkpoint_steps == (20, 60)
