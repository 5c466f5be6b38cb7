#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gazekit/gaze_object_assign.hpp"
#include "gazekit/hha.hpp"
#include "gazekit/ingest.hpp"
#include "gazekit/metrics.hpp"
#include "gazekit/predictors.hpp"
#include "gazekit/prompt_codec.hpp"

namespace py = pybind11;
using namespace gazekit;

namespace {

using Box4 = std::tuple<int, int, int, int>;
using PixelBox4 = std::tuple<double, double, double, double>;
using Point2 = std::pair<double, double>;

NormBox to_norm(const Box4& b) { return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)}; }
Box4 from_norm(const NormBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }
PixelBox to_pixel(const PixelBox4& b) { return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)}; }
GazePoint to_point(const Point2& p) { return {p.first, p.second}; }

PromptConfig prompt_config(int lambda_margin) {
    PromptConfig cfg;
    cfg.lambda_margin = lambda_margin;
    validate(cfg);
    return cfg;
}

Grid<double> to_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw InvalidInput("expected a 2-D array");
    const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    return Grid<double>(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

template <typename T>
py::array_t<T> to_array(const Grid<T>& g) {
    py::array_t<T> out({g.height(), g.width()});
    std::copy(g.values().begin(), g.values().end(), out.mutable_data());
    return out;
}

py::dict prediction_dict(const Prediction& p) {
    py::list boxes;
    for (const auto& b : p.boxes) boxes.append(py::make_tuple(b.x1, b.y1, b.x2, b.y2));
    py::dict d;
    d["sample_id"] = p.sample_id;
    d["task"] = std::string(task_name(p.task));
    d["boxes"] = boxes;
    d["class"] = p.class_label ? py::object(py::str(*p.class_label)) : py::object(py::none());
    d["out_of_frame"] = p.out_of_frame;
    d["out_score"] = p.out_score ? py::object(py::float_(*p.out_score)) : py::object(py::none());
    d["clamped"] = p.clamped;
    return d;
}

}  // namespace

PYBIND11_MODULE(_gazekit, m) {
    m.doc() = "Native core of gazekit";
    m.attr("__version__") = GAZEKIT_VERSION;

    // Module-lifetime handles; released so they are never decref'd at exit.
    static const py::handle error = py::exception<Error>(m, "GazekitError", PyExc_ValueError).release();
    static const py::handle invalid = py::exception<InvalidInput>(m, "InvalidInput", error).release();
    static const py::handle format = py::exception<FormatError>(m, "FormatError", error).release();
    static const py::handle undefined = py::exception<UndefinedMetric>(m, "UndefinedMetric", error).release();
    static const py::handle malformed = py::exception<MalformedResponse>(m, "MalformedResponse", error).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const MalformedResponse& e) {
            py::object exc = py::reinterpret_borrow<py::object>(malformed)(e.what());
            exc.attr("offset") = e.offset();
            PyErr_SetObject(malformed.ptr(), exc.ptr());
        } catch (const InvalidInput& e) {
            py::set_error(invalid, e.what());
        } catch (const FormatError& e) {
            py::set_error(format, e.what());
        } catch (const UndefinedMetric& e) {
            py::set_error(undefined, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    // --- coordinates
    m.def("norm_coord", &norm_coord, py::arg("value"), py::arg("extent"));
    m.def("denorm_coord", &denorm_coord, py::arg("bin"), py::arg("extent"));

    // --- HHA
    m.def(
        "encode_hha",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& depth, double rescale_lo,
           double rescale_hi, double epsilon, int constant_channel_value) {
            HhaConfig cfg;
            cfg.rescale_lo = rescale_lo;
            cfg.rescale_hi = rescale_hi;
            cfg.epsilon = epsilon;
            if (constant_channel_value < 0 || constant_channel_value > 255)
                throw InvalidInput("constant_channel_value must be 0..255");
            cfg.constant_channel_value = static_cast<std::uint8_t>(constant_channel_value);
            const HhaImage hha = encode_hha(DepthMap(to_grid(depth)), cfg);
            const auto h = hha.disparity.height(), w = hha.disparity.width();
            py::array_t<std::uint8_t> out({h, w, 3});
            auto* dst = out.mutable_data();
            const auto d = hha.disparity.values(), g = hha.height.values(), a = hha.angle.values();
            for (std::size_t i = 0; i < d.size(); ++i) {
                dst[3 * i] = d[i];
                dst[3 * i + 1] = g[i];
                dst[3 * i + 2] = a[i];
            }
            return out;
        },
        py::arg("depth"), py::arg("rescale_lo") = 1.0, py::arg("rescale_hi") = 10.0, py::arg("epsilon") = 1e-6,
        py::arg("constant_channel_value") = 0,
        "H x W depth array to an H x W x 3 uint8 array (disparity, height, angle).");
    m.def(
        "sobel_gradients",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            const Gradients g = sobel_gradients(to_grid(a));
            return py::make_tuple(to_array(g.gx), to_array(g.gy));
        },
        py::arg("values"));

    // --- prompt codec
    m.def(
        "serialize_box", [](const Box4& b) { return serialize_box(to_norm(b), PromptConfig{}); }, py::arg("box"));
    m.def(
        "gaze_point_to_box",
        [](const Point2& p, int lambda_margin) { return from_norm(gaze_point_to_box(to_point(p), prompt_config(lambda_margin))); },
        py::arg("point"), py::arg("lambda_margin") = 20);
    m.def(
        "gaze_box_to_point",
        [](const Box4& b, int lambda_margin) {
            const GazePoint p = gaze_box_to_point(to_norm(b), prompt_config(lambda_margin));
            return Point2{p.x, p.y};
        },
        py::arg("box"), py::arg("lambda_margin") = 20);
    m.def(
        "serialize_gaze_statement",
        [](std::optional<Box4> gaze_box, std::optional<std::string> object_class, std::optional<Box4> object_box) {
            const PromptConfig cfg;
            GazeStatement st;
            st.out_of_frame = !gaze_box;
            if (gaze_box) st.gaze_box = to_norm(*gaze_box);
            if (object_class.has_value() != object_box.has_value())
                throw InvalidInput("object_class and object_box go together");
            if (object_class) st.object = ObjectRef{*object_class, to_norm(*object_box)};
            return serialize_gaze_statement(st, cfg);
        },
        py::arg("gaze_box"), py::arg("object_class") = py::none(), py::arg("object_box") = py::none(),
        "gaze_box=None gives the out-of-frame phrase.");
    m.def(
        "parse_response",
        [](const std::string& text, const std::string& sample_id, const std::string& task) {
            return prediction_dict(parse_response(text, PromptConfig{}, sample_id, parse_task(task)));
        },
        py::arg("text"), py::arg("sample_id") = "", py::arg("task") = "gaze_target");
    m.def(
        "build_records",
        [](const std::string& annotations_path, const std::string& task) {
            const auto load = load_annotations(annotations_path);
            std::vector<std::string> out;
            for (const auto& s : load.manifest.samples)
                out.push_back(record_to_json(build_record(s, parse_task(task), PromptConfig{})).dump());
            return out;
        },
        py::arg("annotations_path"), py::arg("task") = "gaze_target",
        "Conversation records for every valid annotation, as JSON strings.");

    // --- assignment
    m.def(
        "iou", [](const PixelBox4& a, const PixelBox4& b) { return iou(to_pixel(a), to_pixel(b)); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "assign_gazed_object",
        [](const Point2& point, std::pair<int, int> size, const std::vector<std::tuple<PixelBox4, std::string, double>>& dets,
           std::optional<double> halfwidth, double min_iou) {
            std::vector<Detection> ds;
            for (const auto& [b, c, s] : dets) ds.push_back({to_pixel(b), c, s});
            AssignConfig cfg;
            cfg.gaze_box_halfwidth = halfwidth;
            cfg.min_iou = min_iou;
            return assign_gazed_object_index(to_point(point), {size.first, size.second}, ds, cfg);
        },
        py::arg("point"), py::arg("image_size"), py::arg("detections"), py::arg("halfwidth") = py::none(),
        py::arg("min_iou") = 0.0, "Index of the gazed detection, or None.");

    // --- metrics
    m.def("roc_auc", [](const std::vector<double>& s, const std::vector<std::uint8_t>& y) { return roc_auc(s, y); },
          py::arg("scores"), py::arg("labels"));
    m.def(
        "heatmap_auc",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& heat, const std::vector<Point2>& pts) {
            std::vector<GazePoint> gts;
            for (const auto& p : pts) gts.push_back(to_point(p));
            return auc(to_grid(heat), gts);
        },
        py::arg("heatmap"), py::arg("gt_points"));
    m.def(
        "build_pred_heatmap",
        [](const Point2& p, int grid, double sigma) {
            MetricConfig cfg;
            cfg.heatmap_grid = grid;
            cfg.heatmap_sigma = sigma;
            return to_array(build_pred_heatmap(to_point(p), cfg));
        },
        py::arg("point"), py::arg("grid") = 64, py::arg("sigma") = 3.0);
    m.def(
        "angle_error",
        [](const Point2& eye, const Point2& pred, const Point2& gt) {
            return angle_error(to_point(eye), to_point(pred), to_point(gt));
        },
        py::arg("eye"), py::arg("pred"), py::arg("gt"));
    m.def(
        "average_precision",
        [](const std::vector<std::uint8_t>& hits, std::size_t num_gt) { return average_precision(hits, num_gt); },
        py::arg("hits"), py::arg("num_gt"));
    m.def(
        "ap_inout",
        [](const std::vector<std::pair<double, bool>>& items) {
            std::vector<InOutItem> v;
            for (const auto& [s, out] : items) v.push_back({s, out});
            return ap_inout(v);
        },
        py::arg("items"), "Items are (out_score, is_out_of_frame) pairs.");

    // --- files
    m.def(
        "predict",
        [](const std::string& annotations_path, const std::string& kind, std::uint64_t seed, double noise) {
            const auto load = load_annotations(annotations_path);
            PredictorSpec spec;
            spec.kind = parse_predictor(kind);
            spec.seed = seed;
            spec.oracle_noise_sigma = noise;
            std::optional<BiasTable> table;
            if (spec.kind == PredictorKind::FixedBias) table = fit_fixed_bias(load.manifest, spec);
            py::list out;
            for (const auto& p : run_predictor(load.manifest, spec, table ? &*table : nullptr))
                out.append(prediction_dict(p));
            return out;
        },
        py::arg("annotations_path"), py::arg("kind") = "center", py::arg("seed") = 0, py::arg("noise") = 0.0);
    m.def(
        "evaluate",
        [](const std::string& predictions_path, const std::string& annotations_path) {
            const auto ann = load_annotations(annotations_path);
            const auto preds = read_predictions(predictions_path);
            return report_to_json(evaluate(preds.items, ann.manifest)).dump();
        },
        py::arg("predictions_path"), py::arg("annotations_path"), "Metric report as a JSON string.");
}
