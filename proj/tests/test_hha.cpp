#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gazekit/hha.hpp"

using namespace gazekit;

namespace {

DepthMap random_depth(std::mt19937_64& rng, int w, int h, double lo = 0.0, double hi = 50.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = d(rng);
    return DepthMap(w, h, std::move(v));
}

// Direct 9-tap correlation with clamped indices.
Gradients reference_sobel(const Grid<double>& d) {
    static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const int w = d.width(), h = d.height();
    Gradients g{Channel(w, h), Channel(w, h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sx = 0, sy = 0;
            for (int j = -1; j <= 1; ++j)
                for (int i = -1; i <= 1; ++i) {
                    const double v = d.at(std::clamp(x + i, 0, w - 1), std::clamp(y + j, 0, h - 1));
                    sx += kx[j + 1][i + 1] * v;
                    sy += kx[i + 1][j + 1] * v;
                }
            g.gx.at(x, y) = sx;
            g.gy.at(x, y) = sy;
        }
    return g;
}

}  // namespace

TEST_CASE("normalize_range") {
    const std::vector<double> a{0, 5, 10};
    const auto r = normalize_range(a, 1, 10);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == doctest::Approx(5.5));
    CHECK(r[2] == 10.0);

    const std::vector<double> c{7, 7, 7};
    for (double v : normalize_range(c, 0, 255)) CHECK(v == 0.0);

    const std::vector<double> fixed{1, 10, 4};
    const auto f = normalize_range(fixed, 1, 10);
    CHECK(f[0] == 1.0);
    CHECK(f[1] == 10.0);

    const std::vector<double> bad{0, std::nan("")};
    CHECK_THROWS_AS(normalize_range(bad, 0, 1), InvalidInput);
    CHECK_THROWS_AS(normalize_range(a, 1, 1), InvalidInput);
}

TEST_CASE("rescale_depth") {
    const DepthMap d(3, 3, {0, 10, 5, 0, 10, 5, 0, 10, 5});
    const auto r = rescale_depth(d);
    CHECK(r.at(0, 0) == 1.0);
    CHECK(r.at(1, 0) == 10.0);
    CHECK(r.at(2, 0) == doctest::Approx(5.5));

    const DepthMap flat(3, 3, std::vector<double>(9, 4.2));
    const DepthMap rf = rescale_depth(flat);
    for (double v : rf.grid().values()) CHECK(v == 1.0);
}

TEST_CASE("disparity_channel") {
    const DepthMap d(3, 3, {1, 10, 2, 1, 10, 2, 1, 10, 2});
    const auto c = disparity_channel(d);
    CHECK(c.at(0, 0) == doctest::Approx(255.0));
    CHECK(c.at(1, 0) == doctest::Approx(0.0));
    CHECK(c.at(2, 0) == doctest::Approx((0.5 - 0.1) / (1 - 0.1) * 255));

    const DepthMap flat(3, 3, std::vector<double>(9, 1.0));
    const Channel dc = disparity_channel(flat);
    for (double v : dc.values()) CHECK(v == 0.0);
}

TEST_CASE("height_channel") {
    const auto h = height_channel({4, 100});
    CHECK(h.at(2, 0) == 0.0);
    CHECK(h.at(1, 50) == doctest::Approx(127.5));
    CHECK(quantize(h).at(1, 50) == 128);
    CHECK(h.at(3, 99) == doctest::Approx(252.45));
    CHECK(quantize(h).at(3, 99) == 252);
}

TEST_CASE("sobel_gradients on constants and ramps") {
    Grid<double> flat(6, 5, 3.0);
    const auto gf = sobel_gradients(flat);
    for (double v : gf.gx.values()) CHECK(v == 0.0);
    for (double v : gf.gy.values()) CHECK(v == 0.0);

    Grid<double> rx(6, 5), ry(6, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) {
            rx.at(x, y) = x;
            ry.at(x, y) = y;
        }
    const auto gx = sobel_gradients(rx);
    const auto gy = sobel_gradients(ry);
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 5; ++x) {
            CHECK(gx.gx.at(x, y) == 8.0);
            CHECK(gx.gy.at(x, y) == 0.0);
            CHECK(gy.gx.at(x, y) == 0.0);
            CHECK(gy.gy.at(x, y) == 8.0);
        }
    CHECK_THROWS_AS(sobel_gradients(Grid<double>(2, 5)), InvalidInput);
}

TEST_CASE("sobel_gradients matches the reference loop bit for bit") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(3, 32);
    for (int t = 0; t < 50; ++t) {
        const DepthMap d = random_depth(rng, dim(rng), dim(rng));
        const auto fast = sobel_gradients(d);
        const auto ref = reference_sobel(d.grid());
        REQUIRE(fast.gx == ref.gx);
        REQUIRE(fast.gy == ref.gy);
    }
}

TEST_CASE("surface_normals") {
    Channel gx(3, 3, 0.0), gy(3, 3, 0.0);
    gx.at(1, 1) = 1.0;
    const auto n = surface_normals(gx, gy);
    CHECK(n.at(0, 0).x == 0.0);
    CHECK(n.at(0, 0).z == 1.0);
    CHECK(n.at(1, 1).x == doctest::Approx(-std::sqrt(0.5)));
    CHECK(n.at(1, 1).y == 0.0);
    CHECK(n.at(1, 1).z == doctest::Approx(std::sqrt(0.5)));
    CHECK_THROWS_AS(surface_normals(gx, Channel(2, 3)), InvalidInput);
}

TEST_CASE("angle_channel") {
    NormalField flat(4, 4);
    const Channel ac = angle_channel(flat);
    for (double v : ac.values()) CHECK(v == 0.0);

    NormalField two(2, 1);
    two.at(1, 0) = {-std::sqrt(0.5), 0, std::sqrt(0.5)};
    const auto a = angle_channel(two);
    CHECK(a.at(0, 0) == 0.0);
    CHECK(a.at(1, 0) == 255.0);

    NormalField over(3, 1);
    over.at(0, 0) = {0, 0, 1.0 + 1e-16};
    over.at(1, 0) = {0, 0, std::nextafter(1.0, 2.0)};
    const Channel oc = angle_channel(over);
    for (double v : oc.values()) CHECK(std::isfinite(v));
}

TEST_CASE("encode_hha matches the step-by-step numpy reference on a 3x3 ramp") {
    // Frozen from tests/oracles/hha_3x3_oracle.py.
    const DepthMap d(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto r = rescale_depth(d);
    const std::vector<double> rescaled{1.0, 2.125, 3.25, 4.375, 5.5, 6.625, 7.75, 8.875, 10.0};
    for (std::size_t i = 0; i < 9; ++i) CHECK(r.grid().values()[i] == doctest::Approx(rescaled[i]));

    const auto g = sobel_gradients(r);
    const std::vector<double> gx{4.5, 9.0, 4.5, 4.5, 9.0, 4.5, 4.5, 9.0, 4.5};
    const std::vector<double> gy{13.5, 13.5, 13.5, 27.0, 27.0, 27.0, 13.5, 13.5, 13.5};
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(g.gx.values()[i] == doctest::Approx(gx[i]));
        CHECK(g.gy.values()[i] == doctest::Approx(gy[i]));
    }

    const std::vector<double> angle{0.0, 62.60823995751389, 0.0, 244.84747610369578, 255.0,
                                    244.84747610369578, 0.0, 62.60823995751389, 0.0};
    const auto a = angle_channel(surface_normals(g.gx, g.gy));
    for (std::size_t i = 0; i < 9; ++i) CHECK(a.values()[i] == doctest::Approx(angle[i]).epsilon(1e-12));

    const HhaImage hha = encode_hha(d);
    const std::vector<int> qd{255, 105, 59, 36, 23, 14, 8, 4, 0};
    const std::vector<int> qh{0, 0, 0, 85, 85, 85, 170, 170, 170};
    const std::vector<int> qa{0, 63, 0, 245, 255, 245, 0, 63, 0};
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(hha.disparity.values()[i] == qd[i]);
        CHECK(hha.height.values()[i] == qh[i]);
        CHECK(hha.angle.values()[i] == qa[i]);
    }
}

TEST_CASE("encode_hha on a constant map") {
    const DepthMap d(64, 64, std::vector<double>(64 * 64, 3.0));
    const HhaImage hha = encode_hha(d);
    const auto ramp = quantize(height_channel({64, 64}));
    CHECK(hha.height == ramp);
    for (auto v : hha.disparity.values()) CHECK(v == 0);
    for (auto v : hha.angle.values()) CHECK(v == 0);
}

TEST_CASE("DepthMap invariants") {
    CHECK_THROWS_AS(DepthMap(2, 5, std::vector<double>(10, 1.0)), InvalidInput);
    CHECK_THROWS_AS(DepthMap(3, 3, {1, 1, 1, 1, -1, 1, 1, 1, 1}), InvalidInput);
    CHECK_THROWS_AS(DepthMap(3, 3, std::vector<double>(8, 1.0)), InvalidInput);
    HhaConfig bad;
    bad.rescale_lo = 10;
    bad.rescale_hi = 1;
    CHECK_THROWS_AS(encode_hha(DepthMap(3, 3, std::vector<double>(9, 1.0)), bad), InvalidInput);
}

TEST_CASE("HHA properties on random maps") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const DepthMap d = random_depth(rng, 24, 17);
        const auto r = rescale_depth(d);
        const auto disp = disparity_channel(r);
        // Anti-monotone: nearer pixels never get lower disparity.
        std::vector<std::size_t> order(r.grid().count());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](auto a, auto b) { return r.grid().values()[a] < r.grid().values()[b]; });
        for (std::size_t k = 1; k < order.size(); ++k)
            REQUIRE(disp.values()[order[k - 1]] >= disp.values()[order[k]]);

        const auto g = sobel_gradients(r);
        const NormalField nf = surface_normals(g.gx, g.gy);
        for (const auto& n : nf.values()) {
            REQUIRE(std::abs(std::hypot(n.x, n.y, n.z) - 1.0) < 1e-9);
            REQUIRE(n.z > 0);
        }
    }
}

TEST_CASE("normalize_range never leaves its target interval") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.2, 30.0);
    for (int m = 0; m < 200; ++m) {
        std::vector<double> v(4096);
        for (auto& x : v) x = u(rng);
        for (double x : normalize_range(v, 0.0, 255.0)) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 255.0);
        }
    }
}
