#include <random>

#include "doctest.h"
#include "gazekit/core.hpp"

using namespace gazekit;

TEST_CASE("norm_coord boundaries and midpoint") {
    CHECK(norm_coord(0, 400) == 0);
    CHECK(norm_coord(400, 400) == 999);
    CHECK(norm_coord(200, 400) == 500);
    CHECK(norm_coord(-3, 400) == 0);
}

TEST_CASE("norm_coord rejects bad input") {
    CHECK_THROWS_AS(norm_coord(std::nan(""), 400), InvalidInput);
    CHECK_THROWS_AS(norm_coord(1, 0), InvalidInput);
    CHECK_THROWS_AS(norm_coord(1, -5), InvalidInput);
    CHECK_THROWS_AS(norm_coord(std::numeric_limits<double>::infinity(), 10), InvalidInput);
}

TEST_CASE("denorm_coord uses bin centers") {
    CHECK(denorm_coord(0, 1000) == doctest::Approx(0.5));
    CHECK(denorm_coord(999, 1000) == doctest::Approx(999.5));
    CHECK_THROWS_AS(denorm_coord(-1, 1000), InvalidInput);
    CHECK_THROWS_AS(denorm_coord(1000, 1000), InvalidInput);
}

TEST_CASE("norm/denorm round trip for every bin") {
    for (double extent : {1000.0, 1001.0, 1080.0, 1920.0, 4096.0, 12345.0})
        for (int b = 0; b <= kMaxNormBin; ++b) REQUIRE(norm_coord(denorm_coord(b, extent), extent) == b);
}

TEST_CASE("norm_coord is monotone and norm_box stays valid") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ext(1, 5000);
    for (int trial = 0; trial < 2000; ++trial) {
        const double e = ext(rng);
        std::uniform_real_distribution<double> v(0, e);
        double a = v(rng), b = v(rng);
        if (a > b) std::swap(a, b);
        REQUIRE(norm_coord(a, e) <= norm_coord(b, e));

        const ImageSize size{static_cast<int>(e) + 1, static_cast<int>(ext(rng)) + 1};
        std::uniform_real_distribution<double> px(0, size.width), py(0, size.height);
        double x1 = px(rng), x2 = px(rng), y1 = py(rng), y2 = py(rng);
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        REQUIRE(is_valid(norm_box({x1, y1, x2, y2}, size)));
    }
}

TEST_CASE("task names round trip") {
    for (Task t : all_tasks()) CHECK(parse_task(task_name(t)) == t);
    CHECK_THROWS_AS(parse_task("gaze"), InvalidInput);
}

TEST_CASE("validation helpers") {
    CHECK_FALSE(is_valid(PixelBox{5, 0, 1, 1}));
    CHECK_FALSE(is_valid(NormBox{0, 0, 1000, 1}));
    CHECK_FALSE(is_valid(GazePoint{1.01, 0.5}));
    CHECK_THROWS_AS(validate(Detection{{0, 0, 1, 1}, "", 0.5}), InvalidInput);
    CHECK_THROWS_AS(validate(Detection{{0, 0, 1, 1}, "cup", 1.5}), InvalidInput);
    CHECK(clamp_to_image({-5, -5, 120, 50}, {100, 100}) == PixelBox{0, 0, 100, 50});
    CHECK(centroid({{0, 0}, {1, 0.5}}) == GazePoint{0.5, 0.25});
    CHECK_THROWS_AS(centroid({}), InvalidInput);
}
