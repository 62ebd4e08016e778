#include <doctest.h>

#include <cmath>

#include "nsa/poisson.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nsa;
using namespace nsa::poisson;

namespace {

BinaryMask centered_region(int W, int H, int rw, int rh) {
    BinaryMask region(W, H);
    const int x0 = (W - rw) / 2, y0 = (H - rh) / 2;
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) region.set(x, y, true);
    return region;
}

// random blob region grown from a few seeds, kept off the border
BinaryMask random_region(int W, int H, RngStream& rng, int target) {
    BinaryMask region(W, H);
    std::vector<std::pair<int, int>> frontier;
    const int sx = 2 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(W - 4)));
    const int sy = 2 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(H - 4)));
    region.set(sx, sy, true);
    frontier.push_back({sx, sy});
    int count = 1;
    while (count < target && !frontier.empty()) {
        const auto idx = rng.uniform_index(frontier.size());
        const auto [x, y] = frontier[idx];
        const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        const auto d = rng.uniform_index(4);
        const int nx = x + dirs[d][0], ny = y + dirs[d][1];
        if (nx >= 1 && ny >= 1 && nx < W - 1 && ny < H - 1 && !region.at(nx, ny)) {
            region.set(nx, ny, true);
            frontier.push_back({nx, ny});
            ++count;
        }
    }
    return region;
}

}  // namespace

TEST_CASE("guidance_source on constant, ramp and checkerboard") {
    const BinaryMask region = centered_region(8, 8, 4, 4);

    ImagePlane constant(8, 8, 1, 0.6f);
    const auto zero_field = guidance_source(constant, region);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (!region.at(x, y)) continue;
            for (int d = 0; d < 4; ++d) CHECK(zero_field.edge(0, d, x, y) == 0.0);
        }

    ImagePlane ramp(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(x, y) = static_cast<float>(x) / 7.0f;
    const auto ramp_field = guidance_source(ramp, region);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (!region.at(x, y)) continue;
            CHECK(ramp_field.edge(0, 0, x, y) == doctest::Approx(-1.0 / 7.0).epsilon(1e-6));
            CHECK(ramp_field.edge(0, 1, x, y) == doctest::Approx(1.0 / 7.0).epsilon(1e-6));
            CHECK(ramp_field.edge(0, 2, x, y) == 0.0);
            CHECK(ramp_field.edge(0, 3, x, y) == 0.0);
        }

    ImagePlane checker(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) checker.at(x, y) = static_cast<float>((x + y) % 2);
    const auto checker_field = guidance_source(checker, region);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (!region.at(x, y)) continue;
            for (int d = 0; d < 4; ++d) CHECK(std::abs(checker_field.edge(0, d, x, y)) == 1.0);
        }
}

TEST_CASE("guidance_mixed branch selection and dominance") {
    RngStream rng(21);
    const BinaryMask region = centered_region(10, 10, 6, 6);
    const auto src = testutil::random_image(10, 10, 3, rng);
    const auto dst = testutil::random_image(10, 10, 3, rng);

    // source == destination reduces to the source field
    const auto same = guidance_mixed(src, src, region);
    const auto source_only = guidance_source(src, region);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            if (!region.at(x, y)) continue;
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 4; ++d)
                    CHECK(same.edge(c, d, x, y) == source_only.edge(c, d, x, y));
        }

    // flat source: field equals destination differences
    ImagePlane flat(10, 10, 3, 0.5f);
    const auto dest_field = guidance_mixed(flat, dst, region);
    const auto dst_grad = guidance_source(dst, region);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            if (!region.at(x, y)) continue;
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 4; ++d)
                    CHECK(dest_field.edge(c, d, x, y) == dst_grad.edge(c, d, x, y));
        }

    // flat destination: the otherwise-branch keeps source differences
    const auto src_field = guidance_mixed(src, flat, region);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            if (!region.at(x, y)) continue;
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 4; ++d)
                    CHECK(src_field.edge(c, d, x, y) == source_only.edge(c, d, x, y));
        }

    // dominance: |v| = max(|df|, |dg|) on every edge
    const auto mixed = guidance_mixed(src, dst, region);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            if (!region.at(x, y)) continue;
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 4; ++d) {
                    const double dg = std::abs(source_only.edge(c, d, x, y));
                    const double df = std::abs(dst_grad.edge(c, d, x, y));
                    CHECK(std::abs(mixed.edge(c, d, x, y)) ==
                          doctest::Approx(std::max(dg, df)).epsilon(1e-12));
                }
        }
}

TEST_CASE("guidance fields are antisymmetric") {
    RngStream rng(22);
    const BinaryMask region = centered_region(12, 12, 8, 8);
    const auto src = testutil::random_image(12, 12, 3, rng);
    const auto dst = testutil::random_image(12, 12, 3, rng);

    for (const auto& field : {guidance_source(src, region), guidance_mixed(src, dst, region)}) {
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                if (!region.at(x, y)) continue;
                // +x edge vs the neighbor's -x edge, +y vs -y
                if (x + 1 < 12 && region.at(x + 1, y))
                    for (int c = 0; c < 3; ++c)
                        CHECK(field.edge(c, 0, x, y) == -field.edge(c, 1, x + 1, y));
                if (y + 1 < 12 && region.at(x, y + 1))
                    for (int c = 0; c < 3; ++c)
                        CHECK(field.edge(c, 2, x, y) == -field.edge(c, 3, x, y + 1));
            }
    }
}

TEST_CASE("solve_poisson reproduces the destination under its own guidance") {
    RngStream rng(23);
    const auto dst = testutil::smooth_random_image(16, 16, 3, rng);
    const BinaryMask region = centered_region(16, 16, 8, 8);
    const auto field = guidance_source(dst, region);
    const auto [out, stats] = solve_poisson(dst, field, 1e-8);
    CHECK(stats.converged);
    CHECK(testutil::max_abs_diff(out, dst) < 1e-6);
}

TEST_CASE("zero field with constant boundary gives a constant interior") {
    ImagePlane dst(12, 12, 1, 0.0f);
    // constant ring value around the region
    const BinaryMask region = centered_region(12, 12, 6, 6);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x)
            if (!region.at(x, y)) dst.at(x, y) = 0.73f;

    GuidanceField zero(region, 1);
    const auto [out, stats] = solve_poisson(dst, zero, 1e-10);
    CHECK(stats.converged);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x)
            if (region.at(x, y))
                CHECK(out.at(x, y) == doctest::Approx(0.73f).epsilon(1e-6));
}

TEST_CASE("iterative solve matches the dense direct solve") {
    RngStream rng(24);
    for (int trial = 0; trial < 20; ++trial) {
        const int channels = trial % 2 == 0 ? 1 : 3;
        const auto dst = testutil::random_image(16, 16, channels, rng);
        const auto src = testutil::random_image(16, 16, channels, rng);
        const BinaryMask region = trial % 3 == 0 ? random_region(16, 16, rng, 120)
                                                 : centered_region(16, 16, 8, 8);
        const auto field = trial % 2 == 0 ? guidance_source(src, region)
                                          : guidance_mixed(src, dst, region);

        const auto [solution, stats] = solve_poisson_raw(dst, field, 1e-11, 20000);
        CHECK(stats.converged);
        CHECK(stats.final_residual <= 1e-11);  // converged implies within tolerance
        const auto ri = poisson::detail::build_region_index(field.region());
        for (int c = 0; c < channels; ++c) {
            const auto exact = oracle::dense_poisson_channel(dst, field, c);
            for (std::size_t k = 0; k < ri.n(); ++k)
                CHECK(solution[static_cast<std::size_t>(c)][k] ==
                      doctest::Approx(exact[k]).epsilon(0).scale(1).epsilon(1e-9));
        }
    }
}

TEST_CASE("dense-oracle agreement holds up to 400-pixel regions") {
    RngStream rng(29);
    for (const int target : {250, 400}) {
        const auto dst = testutil::random_image(26, 26, 1, rng);
        const auto src = testutil::random_image(26, 26, 1, rng);
        const BinaryMask region = random_region(26, 26, rng, target);
        const auto field = guidance_mixed(src, dst, region);
        const auto [solution, stats] = solve_poisson_raw(dst, field, 1e-11, 50000);
        REQUIRE(stats.converged);
        const auto exact = oracle::dense_poisson_channel(dst, field, 0);
        double worst = 0.0;
        for (std::size_t k = 0; k < exact.size(); ++k)
            worst = std::max(worst, std::abs(solution[0][k] - exact[k]));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("exterior pixels are bit-identical to the destination") {
    RngStream rng(25);
    const auto dst = testutil::random_image(20, 18, 3, rng);
    const auto src = testutil::random_image(20, 18, 3, rng);
    const BinaryMask region = random_region(20, 18, rng, 100);
    const auto field = guidance_mixed(src, dst, region);
    const auto [out, stats] = solve_poisson(dst, field, 1e-6);
    for (int y = 0; y < 18; ++y)
        for (int x = 0; x < 20; ++x) {
            if (region.at(x, y)) continue;
            for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == dst.at(x, y, c));
        }
}

TEST_CASE("solve rejects border regions and bad tolerances") {
    ImagePlane dst(8, 8, 1, 0.5f);
    BinaryMask border_region(8, 8);
    border_region.set(0, 3, true);
    GuidanceField field(border_region, 1);
    CHECK_THROWS_AS(solve_poisson(dst, field), std::invalid_argument);

    GuidanceField ok(centered_region(8, 8, 3, 3), 1);
    CHECK_THROWS_AS(solve_poisson(dst, ok, 0.0), std::invalid_argument);
}

TEST_CASE("solution is linear in the guidance field") {
    RngStream rng(26);
    const auto dst = testutil::random_image(14, 14, 1, rng);
    const auto src = testutil::random_image(14, 14, 1, rng);
    const BinaryMask region = centered_region(14, 14, 6, 6);
    const auto field = guidance_source(src, region);

    GuidanceField zero(region, 1);
    GuidanceField scaled(region, 1);
    const double alpha = 2.5;
    for (int y = 0; y < 14; ++y)
        for (int x = 0; x < 14; ++x) {
            if (!region.at(x, y)) continue;
            for (int d = 0; d < 4; ++d)
                scaled.set_edge(0, d, x, y, alpha * field.edge(0, d, x, y));
        }

    const auto [f_v, s1] = solve_poisson_raw(dst, field, 1e-12, 20000);
    const auto [f_0, s2] = solve_poisson_raw(dst, zero, 1e-12, 20000);
    const auto [f_av, s3] = solve_poisson_raw(dst, scaled, 1e-12, 20000);
    REQUIRE(s1.converged);
    REQUIRE(s2.converged);
    REQUIRE(s3.converged);
    for (std::size_t k = 0; k < f_v[0].size(); ++k) {
        const double homogeneous = f_v[0][k] - f_0[0][k];
        CHECK(f_av[0][k] - f_0[0][k] == doctest::Approx(alpha * homogeneous).epsilon(1e-7));
    }
}

TEST_CASE("seamless_clone identity and exterior contract") {
    RngStream rng(27);
    const auto img = testutil::smooth_random_image(32, 32, 3, rng);
    Rect r{0.5, 0.5, 0.4, 0.35};

    // cloning a region onto itself reproduces the destination
    const auto self_clone = seamless_clone(img, img, r, r, GradientMode::source);
    CHECK(testutil::max_abs_diff(self_clone, img) < 1e-5);

    // arbitrary clone: ring and exterior of the clone region stay bit-identical
    const auto other = testutil::smooth_random_image(32, 32, 3, rng);
    Rect src_r{0.3, 0.4, 0.3, 0.3};
    const auto cloned = seamless_clone(other, img, src_r, r, GradientMode::mixed);
    const PixelRect dr = r.to_pixels(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const bool interior =
                x > dr.x && x < dr.x + dr.w - 1 && y > dr.y && y < dr.y + dr.h - 1;
            if (interior) continue;
            for (int c = 0; c < 3; ++c) CHECK(cloned.at(x, y, c) == img.at(x, y, c));
        }
}

TEST_CASE("seamless_clone confines changes to the shape mask") {
    RngStream rng(28);
    const auto dst = testutil::smooth_random_image(48, 48, 1, rng);
    const auto src = testutil::random_image(48, 48, 1, rng);
    Rect r{0.5, 0.5, 0.5, 0.5};
    const PixelRect dr = r.to_pixels(48, 48);
    const auto mask = sampler::ellipse_union_mask(dr.w, dr.h, 5, rng);

    const auto out = seamless_clone(src, dst, r, r, GradientMode::source, &mask);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            if (out.at(x, y) == dst.at(x, y)) continue;
            // changed pixel: must lie inside the mask (rect-interior part)
            const int mx = x - dr.x, my = y - dr.y;
            REQUIRE(mx >= 1);
            REQUIRE(my >= 1);
            REQUIRE(mx < dr.w - 1);
            REQUIRE(my < dr.h - 1);
            CHECK(mask.at(mx, my));
        }
}

TEST_CASE("seamless_clone rejects degenerate and borderline rects") {
    ImagePlane img(16, 16, 1, 0.5f);
    Rect tiny{0.5, 0.5, 0.1, 0.1};  // 2x2 pixels
    CHECK_THROWS_AS(seamless_clone(img, img, tiny, tiny, GradientMode::source),
                    std::invalid_argument);
    Rect touching{0.5, 0.5, 1.0, 1.0};
    CHECK_THROWS_AS(seamless_clone(img, img, touching, touching, GradientMode::source),
                    std::invalid_argument);
}
