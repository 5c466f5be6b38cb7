#include <random>

#include "doctest.h"
#include "gazekit/prompt_codec.hpp"

using namespace gazekit;

namespace {

AnnotatedSample sample_in_frame() {
    AnnotatedSample s;
    s.sample_id = "s1";
    s.image_path = "img/0001.jpg";
    s.hha_path = "hha/0001.png";
    s.image_size = {640, 480};
    s.head_box = {64, 48, 128, 96};
    s.eye_point = {0.15, 0.15};
    s.gaze_points = {{0.5, 0.5}, {0.52, 0.5}};
    s.gazed_object = Detection{{320, 240, 384, 288}, "remote control", 0.9};
    return s;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("serialize_box") {
    const PromptConfig cfg;
    CHECK(serialize_box({125, 250, 500, 750}, cfg) == "<box_start>(125,250),(500,750)<box_end>");
    CHECK(serialize_box({0, 0, 0, 0}, cfg) == "<box_start>(0,0),(0,0)<box_end>");
    CHECK_THROWS_AS(serialize_box({5, 0, 1, 0}, cfg), InvalidInput);
}

TEST_CASE("gaze_point_to_box") {
    const PromptConfig cfg;
    CHECK(gaze_point_to_box({0.5, 0.5}, cfg) == NormBox{480, 480, 520, 520});
    CHECK(gaze_point_to_box({0, 0}, cfg) == NormBox{0, 0, 20, 20});
    CHECK(gaze_point_to_box({1, 1}, cfg) == NormBox{979, 979, 999, 999});
}

TEST_CASE("gaze_point_to_box property sweep") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> lam(1, 499);
    for (int t = 0; t < 20000; ++t) {
        PromptConfig cfg;
        cfg.lambda_margin = lam(rng);
        const GazePoint g{u(rng), u(rng)};
        const NormBox b = gaze_point_to_box(g, cfg);
        REQUIRE(is_valid(b));
        const int cx = static_cast<int>(std::floor(g.x * 1000)), cy = static_cast<int>(std::floor(g.y * 1000));
        const int l = cfg.lambda_margin;
        if (cx - l >= 0 && cx + l <= 999 && cy - l >= 0 && cy + l <= 999) {
            REQUIRE(b.x2 - b.x1 == 2 * l);
            REQUIRE(b.y2 - b.y1 == 2 * l);
        }
    }
}

TEST_CASE("gaze_box_to_point inverts interior and border-clamped boxes") {
    const PromptConfig cfg;
    for (int c = 0; c <= 999; ++c) {
        const double v = (c + 0.5) / 1000;
        const GazePoint g{v, (999 - c + 0.5) / 1000};
        const GazePoint back = gaze_box_to_point(gaze_point_to_box(g, cfg), cfg);
        REQUIRE(back.x == v);
        REQUIRE(back.y == (999 - c + 0.5) / 1000);
    }
    // A box that is not a clamped gaze box decodes to its center.
    CHECK(gaze_box_to_point({0, 0, 5, 5}, cfg).x == doctest::Approx(3.0 / 1000));
}

TEST_CASE("serialize_object_ref and injection guard") {
    const PromptConfig cfg;
    CHECK(serialize_object_ref("cup", {100, 100, 200, 200}, cfg) ==
          "<ref_start>cup<ref_end><box_start>(100,100),(200,200)<box_end>");
    CHECK_THROWS_AS(serialize_object_ref("cup<box_start>", {1, 1, 2, 2}, cfg), InvalidInput);
    CHECK_THROWS_AS(serialize_object_ref("", {1, 1, 2, 2}, cfg), InvalidInput);
}

TEST_CASE("serialize_gaze_statement") {
    const PromptConfig cfg;
    GazeStatement st;
    st.gaze_box = {480, 480, 520, 520};
    CHECK(serialize_gaze_statement(st, cfg) == "<box_start>(480,480),(520,520)<box_end>");
    st.object = ObjectRef{"cup", {100, 100, 200, 200}};
    CHECK(serialize_gaze_statement(st, cfg) ==
          "<box_start>(480,480),(520,520)<box_end><ref_start>cup<ref_end><box_start>(100,100),(200,200)<box_end>");
    st.out_of_frame = true;
    CHECK(serialize_gaze_statement(st, cfg) == "looking out of the image");
}

TEST_CASE("build_record per task") {
    const PromptConfig cfg;
    const AnnotatedSample s = sample_in_frame();

    const auto target = build_record(s, Task::GazeTarget, cfg);
    REQUIRE(target.messages.size() == 2);
    CHECK(target.messages[0].role == Role::User);
    CHECK(count(target.messages[0].content, "<vision_start>") == 2);
    CHECK(target.messages[0].content.find("(100,100),(200,200)") != std::string::npos);  // head box
    CHECK(count(target.messages[1].content, "<box_start>") == 1);
    CHECK(count(target.messages[1].content, "<box_end>") == 1);
    // Centroid (0.51, 0.5) -> bins (510, 500).
    CHECK(target.messages[1].content == "<box_start>(490,480),(530,520)<box_end>");
    CHECK_NOTHROW(validate(target, cfg));
    CHECK(target.image_refs == std::vector<std::string>{"img/0001.jpg", "hha/0001.png"});

    const auto object = build_record(s, Task::GazeObject, cfg);
    CHECK(object.messages[1].content ==
          "<box_start>(490,480),(530,520)<box_end><ref_start>remote control<ref_end>"
          "<box_start>(500,500),(600,600)<box_end>");

    AnnotatedSample out = s;
    out.in_frame = false;
    out.gaze_points.clear();
    out.gazed_object.reset();
    CHECK(build_record(out, Task::GazeInOut, cfg).messages[1].content == "looking out of the image");
    CHECK(build_record(out, Task::GazeObject, cfg).messages[1].content == "looking out of the image");
    CHECK(build_record(s, Task::GazeInOut, cfg).messages[1].content == cfg.in_frame_phrase);

    AnnotatedSample no_obj = s;
    no_obj.gazed_object.reset();
    CHECK_THROWS_AS(build_record(no_obj, Task::GazeObject, cfg), InvalidInput);

    const std::vector<PixelBox> people{{64, 48, 128, 96}, {320, 0, 384, 48}};
    const auto persons = build_record(s, Task::PersonDetection, cfg, people);
    CHECK(persons.messages[1].content ==
          "<box_start>(100,100),(200,200)<box_end><box_start>(500,0),(600,100)<box_end>");
}

TEST_CASE("system prompt and ChatML rendering") {
    PromptConfig cfg;
    cfg.system_prompt = "You are a gaze assistant.";
    const auto rec = build_record(sample_in_frame(), Task::GazeTarget, cfg);
    REQUIRE(rec.messages.size() == 3);
    CHECK(rec.messages[0].role == Role::System);
    CHECK_NOTHROW(validate(rec, cfg));
    const auto chat = render_chatml(rec, cfg);
    CHECK(chat.rfind("<im_start>system\nYou are a gaze assistant.<im_end>\n", 0) == 0);
    CHECK(count(chat, "<im_start>") == 3);
    CHECK(count(chat, "<im_end>") == 3);

    GazeRecord broken = rec;
    std::swap(broken.messages[1], broken.messages[2]);
    CHECK_THROWS_AS(validate(broken, cfg), InvalidInput);
}

TEST_CASE("PromptConfig validation") {
    PromptConfig cfg;
    cfg.lambda_margin = 0;
    CHECK_THROWS_AS(validate(cfg), InvalidInput);
    cfg = {};
    cfg.tokens.ref_end = cfg.tokens.box_end;
    CHECK_THROWS_AS(validate(cfg), InvalidInput);
    cfg = {};
    cfg.tokens.im_start.clear();
    CHECK_THROWS_AS(validate(cfg), InvalidInput);
}

TEST_CASE("parse_response") {
    const PromptConfig cfg;
    const auto one = parse_response("<box_start>(480,480),(520,520)<box_end>", cfg, "a");
    CHECK(one.boxes == std::vector<NormBox>{{480, 480, 520, 520}});
    CHECK_FALSE(one.out_of_frame);
    CHECK(one.sample_id == "a");

    const auto out = parse_response("looking out of the image", cfg);
    CHECK(out.boxes.empty());
    CHECK(out.out_of_frame);
    CHECK(out.raw_text == "looking out of the image");

    try {
        parse_response("<box_start>(1,2),(3", cfg);
        FAIL("expected MalformedResponse");
    } catch (const MalformedResponse& e) {
        CHECK(e.offset() == 0);
    }
    CHECK_THROWS_AS(parse_response("text <box_end>", cfg), MalformedResponse);
    CHECK_THROWS_AS(parse_response("<ref_start>cup<ref_end> nothing", cfg), MalformedResponse);
    CHECK_THROWS_AS(parse_response("<box_start>(a,2),(3,4)<box_end>", cfg), MalformedResponse);
    CHECK_THROWS_AS(parse_response("<box_start>(1,2),(3,4),(5,6)<box_end>", cfg), MalformedResponse);

    const auto loose = parse_response("The target: <box_start>( 10 , 20 ),(30,40)<box_end>.", cfg);
    CHECK(loose.boxes.front() == NormBox{10, 20, 30, 40});

    const auto clamped = parse_response("<box_start>(-5,20),(1200,10)<box_end>", cfg);
    CHECK(clamped.clamped);
    CHECK(clamped.boxes.front() == NormBox{0, 10, 999, 20});
}

TEST_CASE("object box is kept last") {
    const PromptConfig cfg;
    const auto p = parse_response(
        "<ref_start>cup<ref_end><box_start>(1,1),(5,5)<box_end><box_start>(10,10),(50,50)<box_end>", cfg, "x",
        Task::GazeObject);
    REQUIRE(p.class_label == std::string("cup"));
    CHECK(object_box_of(p) == NormBox{1, 1, 5, 5});
    CHECK(gaze_box_of(p) == NormBox{10, 10, 50, 50});
}

TEST_CASE("serialize then parse recovers boxes and class") {
    const PromptConfig cfg;
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> bin(0, 999);
    auto box = [&] {
        int a = bin(rng), b = bin(rng), c = bin(rng), d = bin(rng);
        return NormBox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    };
    for (int t = 0; t < 2000; ++t) {
        GazeStatement st;
        st.gaze_box = box();
        if (t % 2) st.object = ObjectRef{"class " + std::to_string(t), box()};
        const auto p = parse_response(serialize_gaze_statement(st, cfg), cfg);
        REQUIRE(gaze_box_of(p) == st.gaze_box);
        if (st.object) {
            REQUIRE(p.class_label == st.object->class_label);
            REQUIRE(object_box_of(p) == st.object->box);
        } else {
            REQUIRE_FALSE(p.class_label.has_value());
        }
    }
}
