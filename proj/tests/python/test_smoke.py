"""Smoke tests for the python module: metrics, kernels, and a mini pipeline."""

import json
import math
import os

import numpy as np
import pytest

import signxfer as sx

TINY_CONFIG = {
    "seed": 5,
    "synth": {
        "classes": 3,
        "train_per_class": 3,
        "val_per_class": 1,
        "test_per_class": 1,
        "streams": 6,
        "input_dim": 6,
        "stream_length_min": 60,
        "stream_length_max": 80,
        "signs_per_stream_min": 2,
        "signs_per_stream_max": 2,
        "iso_noise": 0.15,
        "domain_shift_strength": 0.15,
    },
    "model": {"feature_dim": 12, "descriptor_dim": 6, "attention_dim": 3},
    "extraction": {"epsilon": 0.2},
    "train_base": {"epochs": 3},
    "train_joint": {"epochs": 3},
    "train_full": {"epochs": 3},
    "memory": {"fallback_to_isolated": True},
}


def test_row_softmax_normalizes():
    out = sx.row_softmax(np.array([[0.0, 0.0], [1.0, 3.0]]))
    assert out.shape == (2, 2)
    assert np.allclose(out.sum(axis=1), 1.0)
    assert np.allclose(out[0], [0.5, 0.5])


def test_temporal_maxpool_and_matmul():
    pooled = sx.temporal_maxpool(np.array([[1.0, 5.0], [3.0, 2.0]]))
    assert pooled.tolist() == [[3.0, 5.0]]
    prod = sx.matmul(np.eye(2), np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert prod.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_bce_loss_value():
    loss = sx.bce_loss(np.array([[0.8, 0.1]]), np.array([[1.0, 0.0]]))
    assert math.isclose(loss, 0.164252, abs_tol=1e-5)


def test_temporal_augment_cycles():
    frames = np.arange(6, dtype=float).reshape(3, 2)
    out = sx.temporal_augment(frames, length=7, seed=1)
    assert out.shape == (7, 2)
    assert out[:3].tolist() == frames.tolist()
    assert out[3].tolist() == frames[0].tolist()


def test_tiou_and_topk():
    assert sx.tiou((0, 0, 10), (0, 5, 15)) == pytest.approx(1 / 3)
    logits = np.array([[2.0, 0.0], [2.0, 0.0], [2.0, 0.0], [2.0, 0.0]])
    labels = [0, 0, 0, 1]
    assert sx.topk_accuracy(logits, labels, 1, "micro") == pytest.approx(75.0)
    assert sx.topk_accuracy(logits, labels, 1, "macro") == pytest.approx(50.0)


def test_map_at_tiou_forced_case():
    gts = [("s", 0, 0, 10)]
    dets = [("s", 0, 0, 10, 0.9), ("s", 0, 20, 30, 0.8)]
    result = sx.map_at_tiou(dets, gts, [0.5])
    assert result[0.5] == pytest.approx(1.0)


def test_default_config_has_spec_defaults():
    cfg = json.loads(sx.default_config())
    assert cfg["extraction"]["epsilon"] == 0.3
    assert cfg["extraction"]["window_min"] == 9
    assert cfg["extraction"]["window_max"] == 16
    assert cfg["eval"]["probability_gate"] == 0.2
    assert cfg["train_full"]["learning_rate"] == 1e-3
    assert cfg["train_full"]["weight_decay"] == 1e-7


def test_unknown_config_key_rejected(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seeed": 1}))
    with pytest.raises(sx.ConfigError):
        sx.run("gen", config=str(bad))


def test_mini_pipeline(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(TINY_CONFIG))
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        sx.run("pipeline", config=str(config))

        classifier = sx.Classifier("out/base.ckpt")
        frames = np.random.RandomState(0).randn(20, 6)
        probs = classifier.probabilities(frames)
        assert probs.shape == (1, 3)
        assert (probs > 0).all() and (probs < 1).all()

        model = sx.FullModel("out/full.ckpt", "out/memory.txt")
        logits = model.logits(frames)
        assert logits.shape == (1, 3)
        trace = model.trace(frames)
        attention = trace["attention"]
        assert attention.shape[0] == 1
        assert attention.sum() == pytest.approx(1.0, abs=1e-9)
        assert trace["correlation"].shape[1] == 3
        idx, lo, hi = model.signature(frames)
        assert 0 <= lo < hi
        assert model.memory_matrix().shape == (3, 12)

        assert os.path.exists("out/eval_full.tsv")
        assert os.path.exists("out/manifests/pipeline.json") or os.path.exists(
            "out/manifests/gen.json"
        )
    finally:
        os.chdir(cwd)
