import numpy as np
import pytest
from PIL import Image

from camograph.errors import InputError
from camograph.metrics import (
    e_measure,
    evaluate_pair,
    evaluate_pair_dir,
    mae,
    s_measure,
    weighted_fmeasure,
    write_report,
)
from camograph.metrics_naive import em_naive, mae_naive, sm_naive, wfm_naive


def random_pair(rng, shape=(16, 16)):
    pred = rng.random(shape)
    gt = (rng.random(shape) > 0.6).astype(np.float64)
    if gt.sum() == 0:
        gt[shape[0] // 2, shape[1] // 2] = 1.0
    if gt.sum() == gt.size:
        gt[0, 0] = 0.0
    return pred, gt


def centered_box(shape=(16, 16)):
    gt = np.zeros(shape)
    gt[5:11, 4:12] = 1.0
    return gt


def test_mae_basic_values():
    gt = centered_box()
    assert mae(gt, gt) == 0.0
    assert mae(1.0 - gt, gt) == 1.0
    assert mae(np.full_like(gt, 0.5), gt) == pytest.approx(0.5, abs=1e-12)


def test_mae_monotone_toward_ground_truth():
    rng = np.random.default_rng(0)
    pred, gt = random_pair(rng)
    last = float("inf")
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        value = mae(pred + t * (gt - pred), gt)
        assert value <= last + 1e-15
        last = value


def test_input_validation():
    gt = centered_box()
    with pytest.raises(InputError):
        mae(np.zeros((8, 8)), gt)
    with pytest.raises(InputError):
        mae(np.full((16, 16), 1.5), gt)
    with pytest.raises(InputError):
        mae(np.zeros((16, 16)), np.full((16, 16), 0.5))
    with pytest.raises(InputError):
        mae(np.zeros((2, 2, 3)), np.zeros((2, 2, 3)))
    with pytest.raises(InputError):
        s_measure(np.zeros((1, 4)), np.zeros((1, 4)))


def test_wfm_perfect_and_zero():
    gt = centered_box()
    assert weighted_fmeasure(gt, gt) == pytest.approx(1.0, abs=1e-12)
    assert weighted_fmeasure(np.zeros_like(gt), gt) == pytest.approx(0.0,
                                                                     abs=1e-12)


def test_wfm_empty_foreground_warns():
    with pytest.warns(UserWarning):
        value = weighted_fmeasure(np.full((8, 8), 0.3), np.zeros((8, 8)))
    assert value == 0.0


def test_em_perfect_and_complement():
    gt = np.zeros((16, 16))
    gt[:, :8] = 1.0  # half plane
    assert e_measure(gt, gt) == pytest.approx(1.0, abs=1e-12)
    assert e_measure(1.0 - gt, gt) < 0.25


def test_em_degenerate_branches():
    pred = np.full((8, 8), 0.25)
    zeros = np.zeros((8, 8))
    ones = np.ones((8, 8))
    # all-background truth scores the fraction of suppressed pixels
    assert e_measure(pred, zeros) == em_naive(pred.tolist(), zeros.tolist())
    assert e_measure(pred, ones) == em_naive(pred.tolist(), ones.tolist())


def test_sm_self_similarity_and_constant_prediction():
    gt = centered_box()
    assert s_measure(gt, gt) > 0.98
    const = np.full_like(gt, gt.mean())
    assert s_measure(const, gt) == pytest.approx(
        sm_naive(const.tolist(), gt.tolist()), abs=1e-5)


def test_sm_degenerate_branches():
    pred = np.full((8, 8), 0.3)
    assert s_measure(pred, np.zeros((8, 8))) == pytest.approx(0.7, abs=1e-12)
    assert s_measure(pred, np.ones((8, 8))) == pytest.approx(0.3, abs=1e-12)


def test_all_metrics_match_oracles():
    rng = np.random.default_rng(1)
    for _ in range(10):
        pred, gt = random_pair(rng)
        pl, gl = pred.tolist(), gt.tolist()
        assert mae(pred, gt) == pytest.approx(mae_naive(pl, gl), abs=1e-6)
        assert weighted_fmeasure(pred, gt) == pytest.approx(wfm_naive(pl, gl),
                                                            abs=1e-6)
        assert e_measure(pred, gt) == pytest.approx(em_naive(pl, gl), abs=1e-5)
        assert s_measure(pred, gt) == pytest.approx(sm_naive(pl, gl), abs=1e-5)


def test_transposition_invariance():
    rng = np.random.default_rng(2)
    for _ in range(10):
        pred, gt = random_pair(rng, shape=(12, 9))
        for fn in (mae, weighted_fmeasure, e_measure, s_measure):
            a = fn(pred, gt)
            b = fn(pred.T.copy(), gt.T.copy())
            assert a == pytest.approx(b, abs=1e-12)


def test_evaluate_pair_collects_all_four():
    rng = np.random.default_rng(3)
    pred, gt = random_pair(rng)
    row = evaluate_pair(pred, gt)
    assert set(row) == {"mae", "wfm", "em", "sm"}
    assert all(np.isfinite(v) for v in row.values())


def write_mask(path, arr):
    Image.fromarray((np.asarray(arr) * 255).astype(np.uint8), mode="L").save(path)


def test_dir_evaluation_identical(tmp_path):
    rng = np.random.default_rng(4)
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    for i in range(3):
        _, gt = random_pair(rng)
        write_mask(pred_dir / f"{i}.png", gt)
        write_mask(gt_dir / f"{i}.png", gt)
    report = evaluate_pair_dir(pred_dir, gt_dir)
    assert not report["errors"]
    assert report["aggregate"]["mae"] == 0.0
    assert report["aggregate"]["wfm"] == pytest.approx(1.0, abs=1e-9)
    assert [r["id"] for r in report["per_image"]] == ["0", "1", "2"]


def test_dir_evaluation_missing_and_bad_files(tmp_path):
    rng = np.random.default_rng(5)
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    good_pred, good_gt = random_pair(rng)
    write_mask(pred_dir / "good.png", good_pred)
    write_mask(gt_dir / "good.png", good_gt)
    write_mask(pred_dir / "orphan.png", good_pred)
    write_mask(pred_dir / "small.png", np.zeros((8, 8)))
    write_mask(gt_dir / "small.png", good_gt)

    report = evaluate_pair_dir(pred_dir, gt_dir)
    assert [r["id"] for r in report["per_image"]] == ["good"]
    assert len(report["errors"]) == 2
    assert any("orphan" in e for e in report["errors"])
    assert any("small" in e for e in report["errors"])


def test_dir_aggregate_is_mean_of_rows(tmp_path):
    rng = np.random.default_rng(6)
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    for i in range(5):
        pred, gt = random_pair(rng)
        write_mask(pred_dir / f"{i}.png", pred)
        write_mask(gt_dir / f"{i}.png", gt)
    report = evaluate_pair_dir(pred_dir, gt_dir)
    for key in ("mae", "wfm", "em", "sm"):
        rows = [r[key] for r in report["per_image"]]
        assert report["aggregate"][key] == float(np.mean(rows))

    out = tmp_path / "report.json"
    write_report(report, out)
    import json

    loaded = json.loads(out.read_text())
    assert set(loaded) == {"per_image", "aggregate", "errors"}
