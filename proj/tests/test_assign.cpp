#include <random>

#include "doctest.h"
#include "gazekit/gaze_object_assign.hpp"

using namespace gazekit;

TEST_CASE("iou") {
    const PixelBox a{0, 0, 10, 10}, b{5, 5, 15, 15};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0));
    CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
    CHECK(iou({1, 1, 1, 1}, {1, 1, 1, 1}) == 0.0);
    CHECK(iou(a, {10, 0, 20, 10}) == 0.0);  // shared edge only
}

TEST_CASE("iou symmetry and range") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50, 150);
    for (int t = 0; t < 5000; ++t) {
        auto box = [&] {
            double x1 = u(rng), x2 = u(rng), y1 = u(rng), y2 = u(rng);
            return PixelBox{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
        };
        const PixelBox a = box(), b = box();
        REQUIRE(iou(a, b) == iou(b, a));
        REQUIRE(iou(a, b) >= 0.0);
        REQUIRE(iou(a, b) <= 1.0);
        if (a.area() > 0) REQUIRE(iou(a, a) == 1.0);
    }
}

TEST_CASE("gaze box size defaults to 2% of the diagonal") {
    const AssignConfig cfg;
    CHECK(gaze_box_halfwidth({300, 400}, cfg) == doctest::Approx(10.0));
    const PixelBox g = gaze_pixel_box({0.5, 0.5}, {300, 400}, cfg);
    CHECK(g == PixelBox{140, 190, 160, 210});
    AssignConfig fixed;
    fixed.gaze_box_halfwidth = 3;
    CHECK(gaze_pixel_box({0, 0}, {300, 400}, fixed) == PixelBox{-3, -3, 3, 3});
}

TEST_CASE("assign_gazed_object basics") {
    const ImageSize size{300, 400};
    CHECK_FALSE(assign_gazed_object({0.5, 0.5}, size, {}).has_value());

    const std::vector<Detection> one{{{100, 150, 200, 250}, "cup", 0.4}};
    const auto hit = assign_gazed_object({0.5, 0.5}, size, one);
    REQUIRE(hit.has_value());
    CHECK(hit->class_label == "cup");

    const std::vector<Detection> far{{{0, 0, 10, 10}, "cup", 0.9}};
    CHECK_FALSE(assign_gazed_object({0.9, 0.9}, size, far).has_value());

    AssignConfig strict;
    strict.min_iou = 0.99;
    CHECK_FALSE(assign_gazed_object({0.5, 0.5}, size, one, strict).has_value());
}

TEST_CASE("tie breaking") {
    const ImageSize size{300, 400};
    const std::vector<Detection> dets{{{140, 190, 160, 210}, "a", 0.3}, {{140, 190, 160, 210}, "b", 0.8}};
    CHECK(assign_gazed_object({0.5, 0.5}, size, dets)->class_label == "b");
    AssignConfig first;
    first.tie_break = TieBreak::FirstIndex;
    CHECK(assign_gazed_object({0.5, 0.5}, size, dets, first)->class_label == "a");
}

TEST_CASE("assignment is permutation invariant with distinct scores") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1), px(0, 300);
    const ImageSize size{300, 300};
    for (int t = 0; t < 300; ++t) {
        std::vector<Detection> dets;
        for (int i = 0; i < 12; ++i) {
            const double x = px(rng), y = px(rng);
            dets.push_back({{x, y, x + 40, y + 40}, "c" + std::to_string(i), (i + 1) / 13.0});
        }
        const GazePoint g{u(rng), u(rng)};
        const auto base = assign_gazed_object(g, size, dets);
        std::shuffle(dets.begin(), dets.end(), rng);
        REQUIRE(assign_gazed_object(g, size, dets) == base);
    }
}
