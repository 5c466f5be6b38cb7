#include <cmath>

#include "doctest.h"
#include "gazekit/ingest.hpp"
#include "gazekit/predictors.hpp"

using namespace gazekit;

namespace {

AnnotatedSample sample(const std::string& id, PixelBox head, GazePoint gaze) {
    AnnotatedSample s;
    s.sample_id = id;
    s.image_path = id + ".jpg";
    s.image_size = {800, 800};
    s.head_box = head;
    s.eye_point = box_center_normalized(head, s.image_size);
    s.gaze_points = {gaze};
    return s;
}

}  // namespace

TEST_CASE("predictor names") {
    for (auto k : {PredictorKind::Random, PredictorKind::Center, PredictorKind::FixedBias, PredictorKind::Oracle})
        CHECK(parse_predictor(predictor_name(k)) == k);
    CHECK_THROWS_AS(parse_predictor("gaussian"), InvalidInput);
}

TEST_CASE("sample seeds are stable and distinct") {
    CHECK(sample_seed(1, "a") == sample_seed(1, "a"));
    CHECK(sample_seed(1, "a") != sample_seed(2, "a"));
    CHECK(sample_seed(1, "a") != sample_seed(1, "b"));
}

TEST_CASE("center predictor") {
    const auto p = predict_center(sample("x", {0, 0, 10, 10}, {0.1, 0.1}));
    CHECK(p.boxes == std::vector<NormBox>{{480, 480, 520, 520}});
    CHECK(p.task == Task::GazeTarget);
    CHECK(p.raw_text == "<box_start>(480,480),(520,520)<box_end>");
}

TEST_CASE("random predictor is deterministic and centered") {
    PredictorSpec spec;
    spec.kind = PredictorKind::Random;
    spec.seed = 42;
    const auto s = sample("abc", {0, 0, 10, 10}, {0.1, 0.1});
    CHECK(predict_random(s, spec) == predict_random(s, spec));
    spec.seed = 43;
    const auto other = predict_random(s, spec);
    spec.seed = 42;
    CHECK_FALSE(predict_random(s, spec) == other);

    double sx = 0, sy = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto p = predict_random(sample(std::to_string(i), {0, 0, 10, 10}, {0.1, 0.1}), spec);
        const GazePoint g = gaze_box_to_point(p.boxes.front(), spec.prompt);
        REQUIRE(is_valid(g));
        sx += g.x;
        sy += g.y;
    }
    CHECK(std::abs(sx / n - 0.5) < 0.01);
    CHECK(std::abs(sy / n - 0.5) < 0.01);
}

TEST_CASE("fixed bias") {
    DatasetManifest train;
    train.samples = {sample("a", {0, 0, 100, 100}, {0.2, 0.4}), sample("b", {0, 0, 100, 100}, {0.4, 0.2}),
                     sample("c", {700, 700, 800, 800}, {0.9, 0.9})};
    AnnotatedSample out = sample("o", {0, 0, 100, 100}, {0, 0});
    out.in_frame = false;
    out.gaze_points.clear();
    train.samples.push_back(out);

    PredictorSpec spec;
    spec.kind = PredictorKind::FixedBias;
    const BiasTable t = fit_fixed_bias(train, spec);
    CHECK(t.cells.size() == 2);
    CHECK(t.cells.at({0, 0}).count == 2);
    CHECK(t.cells.at({0, 0}).mean().x == doctest::Approx(0.3));
    CHECK(t.global.x == doctest::Approx(0.5));

    // Known cell uses its mean, unseen cell falls back to the global mean.
    const auto hit = predict_fixed_bias(sample("q", {10, 10, 50, 50}, {0, 0}), t, spec);
    CHECK(hit.boxes.front() == gaze_point_to_box({0.3, 0.3}, spec.prompt));
    const auto miss = predict_fixed_bias(sample("r", {400, 0, 450, 50}, {0, 0}), t, spec);
    CHECK(miss.boxes.front() == gaze_point_to_box(t.global, spec.prompt));

    CHECK(bias_table_from_json(bias_table_to_json(t)) == t);

    DatasetManifest empty;
    CHECK_THROWS_AS(fit_fixed_bias(empty, spec), InvalidInput);
    CHECK_THROWS_AS(run_predictor(train, spec, nullptr), InvalidInput);
}

TEST_CASE("oracle") {
    PredictorSpec spec;
    spec.kind = PredictorKind::Oracle;
    AnnotatedSample s = sample("s", {0, 0, 80, 80}, {0.2505, 0.7505});
    s.gazed_object = Detection{{160, 560, 240, 640}, "cup", 1.0};

    const auto p = predict_oracle(s, spec);
    CHECK(p.task == Task::GazeObject);
    REQUIRE(p.class_label == std::string("cup"));
    CHECK(gaze_box_to_point(*gaze_box_of(p), spec.prompt) == GazePoint{0.2505, 0.7505});
    CHECK(object_box_of(p) == norm_box(s.gazed_object->bbox, s.image_size));
    CHECK(p.out_score == 0.0);

    AnnotatedSample out = s;
    out.in_frame = false;
    out.gaze_points.clear();
    const auto po = predict_oracle(out, spec);
    CHECK(po.out_of_frame);
    CHECK(po.raw_text == "looking out of the image");
    CHECK(po.out_score == 1.0);

    spec.oracle_noise_sigma = 0.05;
    spec.seed = 7;
    const auto noisy = predict_oracle(s, spec);
    CHECK(noisy == predict_oracle(s, spec));
    CHECK_FALSE(noisy.boxes.front() == p.boxes.front());

    spec.oracle_noise_sigma = -1;
    CHECK_THROWS_AS(validate(spec), InvalidInput);
}

TEST_CASE("run_predictor keeps sample order") {
    DatasetManifest m;
    for (int i = 0; i < 5; ++i) m.samples.push_back(sample("id" + std::to_string(i), {0, 0, 10, 10}, {0.5, 0.5}));
    PredictorSpec spec;
    spec.kind = PredictorKind::Random;
    const auto preds = run_predictor(m, spec);
    REQUIRE(preds.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(preds[i].sample_id == "id" + std::to_string(i));
    // Per-sample seeding: a sub-manifest yields the same prediction.
    DatasetManifest sub;
    sub.samples = {m.samples[3]};
    CHECK(run_predictor(sub, spec)[0] == preds[3]);
}
