import json

import numpy as np
import pytest

import gazekit


def test_coordinates():
    assert gazekit.norm_coord(320, 640) == 500
    assert gazekit.norm_coord(640, 640) == 999
    assert gazekit.denorm_coord(500, 640) == pytest.approx(320.32)
    with pytest.raises(gazekit.InvalidInput):
        gazekit.denorm_coord(1000, 640)


def test_encode_hha_shapes_and_flat_map():
    rng = np.random.default_rng(0)
    hha = gazekit.encode_hha(rng.uniform(0.5, 8.0, size=(24, 32)))
    assert hha.shape == (24, 32, 3)
    assert hha.dtype == np.uint8
    flat = gazekit.encode_hha(np.full((8, 8), 2.0))
    assert (flat[:, :, 2] == 0).all()
    with pytest.raises(gazekit.InvalidInput):
        gazekit.encode_hha(np.zeros((2, 2)))


def test_sobel_matches_numpy():
    rng = np.random.default_rng(1)
    d = rng.uniform(0, 10, size=(7, 9))
    p = np.pad(d, 1, mode="edge")
    k = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
    gx = np.zeros_like(d)
    gy = np.zeros_like(d)
    for y in range(d.shape[0]):
        for x in range(d.shape[1]):
            win = p[y:y + 3, x:x + 3]
            gx[y, x] = (win * k).sum()
            gy[y, x] = (win * k.T).sum()
    fx, fy = gazekit.sobel_gradients(d)
    np.testing.assert_allclose(fx, gx, atol=1e-12)
    np.testing.assert_allclose(fy, gy, atol=1e-12)


def test_codec_round_trip():
    box = gazekit.gaze_point_to_box((0.5, 0.5))
    assert box == (480, 480, 520, 520)
    text = gazekit.serialize_gaze_statement(box, "cup", (100, 100, 200, 200))
    pred = gazekit.parse_response(text, "s1", "gaze_object")
    assert pred["boxes"] == [box, (100, 100, 200, 200)]
    assert pred["class"] == "cup"
    assert gazekit.parse_response(gazekit.serialize_gaze_statement(None))["out_of_frame"]
    with pytest.raises(gazekit.MalformedResponse) as err:
        gazekit.parse_response("xx<box_start>(1,2")
    assert err.value.offset == 2
    assert isinstance(err.value, ValueError)


def test_assign_and_metrics():
    assert gazekit.iou((0, 0, 10, 10), (5, 5, 15, 15)) == pytest.approx(1 / 7)
    dets = [((0, 0, 10, 10), "a", 0.9), ((140, 190, 160, 210), "b", 0.5)]
    assert gazekit.assign_gazed_object((0.5, 0.5), (300, 400), dets) == 1
    assert gazekit.assign_gazed_object((0.99, 0.01), (300, 400), dets) is None
    assert gazekit.ap_inout([(0.9, True), (0.8, False), (0.7, True)]) == pytest.approx(5 / 6, abs=1e-12)
    assert gazekit.average_precision([1, 0, 1], 2) == pytest.approx(5 / 6, abs=1e-12)
    assert gazekit.roc_auc([0.1, 0.2, 0.3], [0, 0, 1]) == 1.0
    assert gazekit.heatmap_auc(np.full((16, 16), 0.2), [(0.5, 0.5)]) == 0.5
    heat = gazekit.build_pred_heatmap((0.25, 0.75), grid=32, sigma=2.0)
    assert np.unravel_index(heat.argmax(), heat.shape) == (24, 8)
    assert gazekit.angle_error((0.5, 0.5), (0.9, 0.5), (0.5, 0.1)) == pytest.approx(90.0)
    with pytest.raises(gazekit.UndefinedMetric):
        gazekit.angle_error((0.5, 0.5), (0.5, 0.5), (0.1, 0.1))


def _write_annotations(path):
    rows = []
    for i in range(8):
        g = [(100 * i + 50.5) / 1000, 0.6005]
        rows.append({
            "sample_id": f"s{i}", "image": f"{i}.jpg", "width": 800, "height": 600,
            "head_box": [40 * i, 10, 40 * i + 30, 40], "eye": [(40 * i + 15) / 800, 25 / 600],
            "gaze_points": [g] if i != 7 else [], "in_frame": i != 7,
            "gazed_object": {"bbox": [g[0] * 800 - 30, 300, g[0] * 800 + 30, 420], "class": "cup"} if i != 7 else None,
        })
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def test_predict_and_evaluate(tmp_path):
    ann = tmp_path / "ann.jsonl"
    _write_annotations(ann)
    records = gazekit.build_records(ann, "gaze_object")
    assert len(records) == 8
    assert records[0]["messages"][1]["role"] == "assistant"

    preds = gazekit.predict(str(ann), "oracle")
    assert len(preds) == 8
    assert gazekit.predict(str(ann), "random", seed=3) == gazekit.predict(str(ann), "random", seed=3)

    out = tmp_path / "pred.jsonl"
    with out.open("w") as f:
        for p in preds:
            f.write(json.dumps({"sample_id": p["sample_id"], "task": p["task"], "boxes": p["boxes"],
                                "class": p["class"], "out_of_frame": p["out_of_frame"],
                                "out_score": p["out_score"]}) + "\n")
    report = gazekit.evaluate(out, ann)
    assert report["dist"] == 0.0
    assert report["angle_deg"] == 0.0
    assert report["ap_ob"] == 1.0
    assert report["ap_inout"] == 1.0
