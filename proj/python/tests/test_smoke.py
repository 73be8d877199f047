import math

import pytest

import vgrl


def seg(cat, start, end):
    return {"category": cat, "start": start, "end": end}


def test_labels():
    names = vgrl.labels()
    assert "Normal" in names
    assert len(names) == 6


def test_iou():
    assert vgrl.interval_iou((0, 2), (1, 3)) == pytest.approx(1 / 3)
    assert vgrl.interval_iou((1, 1), (1, 1)) == 1.0
    assert vgrl.union_iou([(0, 1), (2, 3)], [(0, 3)]) == pytest.approx(2 / 3)
    with pytest.raises(vgrl.InvalidInterval):
        vgrl.reward_category([seg("Normal", 2, 1)], [])


def test_render_parse_round_trip():
    preds = [seg("VulgarContent", 1.5, 4.25), seg("Normal", 0.0, 10.0)]
    text = vgrl.render("looks vulgar", preds)
    think, back = vgrl.parse(text)
    assert think == "looks vulgar"
    assert sorted(back, key=lambda d: d["category"]) == sorted(preds, key=lambda d: d["category"])
    v = vgrl.validate(text)
    assert v == {"thinking_ok": True, "grounding_soft_ok": True, "grounding_strict_ok": True}
    with pytest.raises(vgrl.ParseError):
        vgrl.parse("<answer>[]</answer>")
    assert vgrl.validate("garbage")["grounding_soft_ok"] is False


def test_rewards():
    ann = [seg("VulgarContent", 0, 5)]
    assert vgrl.reward_iou([seg("VulgarContent", 0, 2.5)], [seg("VulgarContent", 0, 5)]) == 0.0
    assert vgrl.reward_boundary([seg("VulgarContent", 1, 6)], ann, 5.0, 10.0) == pytest.approx(math.exp(-0.5))
    assert vgrl.reward_category([seg("Normal", 0, 1)], ann) == 0.0
    text = vgrl.render("t", ann)
    r = vgrl.score_completion(text, ann, 10.0, stage=3)
    assert r["r_iou"] == 1.0 and r["r_boundary"] == 1.0
    assert r["total"] == pytest.approx(1 + 1 + 1 + 0.5 + 1)


def test_grpo_helpers():
    assert vgrl.compute_advantages([1, 0, 1, 0]) == [1, -1, 1, -1]
    assert vgrl.compute_advantages([0.7, 0.7, 0.7]) == [0, 0, 0]
    with pytest.raises(vgrl.GroupTooSmall):
        vgrl.compute_advantages([1.0])
    assert vgrl.kl_estimate(-1.0, -1.0) == 0.0
    assert vgrl.kl_estimate(-3.0, -1.0) > 0.0


def test_generate_is_deterministic(tmp_path):
    world = {"num_videos": 5, "seed": 3}
    a = vgrl.generate_dataset(world, tmp_path / "a.jsonl")
    b = vgrl.generate_dataset(world, tmp_path / "b.jsonl")
    assert a == b
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert len(a) == 5 and len(a[0]["bins"]) == 32
    with pytest.raises(vgrl.ConfigError):
        vgrl.generate_dataset({"no_such_key": 1})


def test_train_and_evaluate(tmp_path):
    vgrl.generate_dataset({"num_videos": 30, "seed": 4}, tmp_path / "train.jsonl")
    cfg = vgrl.default_config()
    cfg["data"] = str(tmp_path / "train.jsonl")
    for stage, steps in zip(cfg["stages"], (20, 40, 20)):
        stage["steps"] = steps
    run = tmp_path / "run"
    out = vgrl.train(cfg, run)
    assert not out["diverged"]
    assert [s["steps"] for s in out["stages"]] == [20, 40, 20]
    assert 0.0 <= out["eval_gt"]["average"]["miou"] <= 1.0
    assert vgrl.checkpoint_hash(run / "stage3.ckpt") == out["final_hash"]
    rep = vgrl.evaluate(run / "stage3.ckpt", tmp_path / "train.jsonl", against="gt")
    assert rep == out["eval_gt"]
    (tmp_path / "bad.ckpt").write_bytes(b"nope")
    with pytest.raises(vgrl.CorruptCheckpoint):
        vgrl.evaluate(tmp_path / "bad.ckpt", tmp_path / "train.jsonl")
    (tmp_path / "bad.jsonl").write_text("{}\n")
    with pytest.raises(vgrl.IngestError):
        vgrl.evaluate(run / "stage3.ckpt", tmp_path / "bad.jsonl")
