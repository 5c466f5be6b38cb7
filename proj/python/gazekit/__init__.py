"""Gaze-following data preparation, baselines and metrics."""

import json as _json

from ._gazekit import (  # noqa: F401
    FormatError,
    GazekitError,
    InvalidInput,
    MalformedResponse,
    UndefinedMetric,
    __version__,
    angle_error,
    ap_inout,
    assign_gazed_object,
    average_precision,
    build_pred_heatmap,
    build_records as _build_records,
    denorm_coord,
    encode_hha,
    evaluate as _evaluate,
    gaze_box_to_point,
    gaze_point_to_box,
    heatmap_auc,
    iou,
    norm_coord,
    parse_response,
    predict,
    roc_auc,
    serialize_box,
    serialize_gaze_statement,
    sobel_gradients,
)


def build_records(annotations_path, task="gaze_target"):
    """Conversation records (dicts) for one task."""
    return [_json.loads(r) for r in _build_records(str(annotations_path), task)]


def evaluate(predictions_path, annotations_path):
    """Metric report as a dict."""
    return _json.loads(_evaluate(str(predictions_path), str(annotations_path)))
