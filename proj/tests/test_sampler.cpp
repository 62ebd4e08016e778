#include <doctest.h>

#include <cmath>
#include <set>

#include "nsa/sampler.hpp"
#include "test_util.hpp"

using namespace nsa;
using namespace nsa::sampler;

namespace {

ClassConfig bottle_like() {
    ClassConfig cfg;
    cfg.name = "bottle";
    cfg.n_max = 3;
    cfg.background = BackgroundConstraints{200.0, 60.0, 0.7, 0.25};
    return cfg;
}

ClassConfig unconstrained() {
    ClassConfig cfg;
    cfg.name = "cable";
    cfg.n_max = 3;
    return cfg;
}

}  // namespace

TEST_CASE("sample_patch_size clamps and truncates") {
    RngStream rng(31);
    ClassConfig fixed;
    fixed.w_min = fixed.w_max = 0.5;
    fixed.h_min = fixed.h_max = 0.5;
    for (int i = 0; i < 100; ++i) {
        const auto [w, h] = sample_patch_size(fixed, rng);
        CHECK(w == 0.5);
        CHECK(h == 0.5);
    }

    ClassConfig dflt;  // 0.06 / 0.80 bounds
    for (int i = 0; i < 100000; ++i) {
        const auto [w, h] = sample_patch_size(dflt, rng);
        REQUIRE(w >= 0.06);
        REQUIRE(w <= 0.80);
        REQUIRE(h >= 0.06);
        REQUIRE(h <= 0.80);
    }
}

TEST_CASE("sample_patch_size mean under wide bounds") {
    // E[0.06 + Gamma(2, 0.1)] = 0.26; truncation to (0.001, 0.999) is negligible
    RngStream rng(32);
    ClassConfig cfg;
    cfg.w_min = cfg.h_min = 0.001;
    cfg.w_max = cfg.h_max = 0.999;
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_patch_size(cfg, rng).first;
    CHECK(sum / n == doctest::Approx(0.26).epsilon(0.04));
}

TEST_CASE("sample_source_rect accepts immediately without constraints") {
    RngStream rng(33);
    const auto img = testutil::object_scene(64, 200, 40);
    const BinaryMask mask(64, 64, true);
    ClassConfig cfg = bottle_like();
    int tries = 0;
    const Rect r = sample_source_rect(img, &mask, cfg, rng, &tries);
    CHECK(tries == 1);
    const PixelRect pr = r.to_pixels(64, 64);
    CHECK(pr.w >= 1);
}

TEST_CASE("sample_source_rect fails on an unsatisfiable mask") {
    RngStream rng(34);
    const auto img = testutil::object_scene(64, 200, 40);
    const BinaryMask empty(64, 64, false);
    ClassConfig cfg = bottle_like();
    CHECK_THROWS_AS(sample_source_rect(img, &empty, cfg, rng), PlacementError);
}

TEST_CASE("accepted source rects satisfy the object constraint under recount") {
    RngStream rng(35);
    const int size = 64;
    BinaryMask left_half(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size / 2; ++x) left_half.set(x, y, true);
    const ImagePlane img(size, size, 1, 0.5f);

    ClassConfig cfg = bottle_like();
    cfg.w_max = 0.4;
    cfg.h_max = 0.4;
    int accepted = 0;
    for (int i = 0; i < 3000; ++i) {
        try {
            const Rect r = sample_source_rect(img, &left_half, cfg, rng);
            const PixelRect pr = r.to_pixels(size, size);
            long long inside = 0;
            for (int y = pr.y; y < pr.y + pr.h; ++y)
                for (int x = pr.x; x < pr.x + pr.w; ++x)
                    if (x < size / 2) ++inside;
            REQUIRE(static_cast<double>(inside) / pr.area() > cfg.background->t_object);
            ++accepted;
        } catch (const PlacementError&) {
        }
    }
    CHECK(accepted > 1000);
}

TEST_CASE("sample_destination honours scale bounds and constraints") {
    RngStream rng(36);
    const auto img = testutil::object_scene(64, 200, 40);
    const auto mask = object_mask(img, 200, 60);

    SUBCASE("no constraints: first candidate accepted") {
        ClassConfig cfg = unconstrained();
        int tries = 0;
        const Rect src = sample_source_rect(img, nullptr, cfg, rng, &tries);
        const auto placement = sample_destination(img, nullptr, src, nullptr, cfg, rng);
        CHECK(placement.dest_tries == 1);
    }

    SUBCASE("unit scale bounds give identical sizes") {
        ClassConfig cfg = unconstrained();
        cfg.s_min = cfg.s_max = 1.0;
        for (int i = 0; i < 200; ++i) {
            const Rect src = sample_source_rect(img, nullptr, cfg, rng);
            const auto placement = sample_destination(img, nullptr, src, nullptr, cfg, rng);
            CHECK(placement.scale == 1.0);
            CHECK(placement.dst_rect.width_frac == src.width_frac);
            CHECK(placement.dst_rect.height_frac == src.height_frac);
        }
    }

    SUBCASE("accepted placements satisfy recounted constraints") {
        ClassConfig cfg = bottle_like();
        int accepted = 0;
        for (int i = 0; i < 1000; ++i) {
            try {
                const auto placement = place_one(img, &mask, img, &mask, cfg, rng);
                const PixelRect pr = placement.dst_rect.to_pixels(64, 64);
                const PixelRect sr = placement.src_rect.to_pixels(64, 64);

                // recount both constraints from scratch
                long long obj = 0;
                for (int y = pr.y; y < pr.y + pr.h; ++y)
                    for (int x = pr.x; x < pr.x + pr.w; ++x)
                        if (mask.at(x, y)) ++obj;
                REQUIRE(static_cast<double>(obj) / pr.area() > cfg.background->t_object);

                const BinaryMask patch_obj = sampler::detail::crop_mask(mask, sr);
                const BinaryMask resized = resize_nearest(patch_obj, pr.w, pr.h);
                long long total = 0, hit = 0;
                for (int y = 0; y < pr.h; ++y)
                    for (int x = 0; x < pr.w; ++x)
                        if (resized.at(x, y)) {
                            ++total;
                            if (mask.at(pr.x + x, pr.y + y)) ++hit;
                        }
                REQUIRE(total > 0);
                REQUIRE(static_cast<double>(hit) / total > cfg.background->t_overlap);
                ++accepted;
            } catch (const PlacementError&) {
            }
        }
        CHECK(accepted > 500);
    }

    SUBCASE("scale law holds for every emitted placement") {
        ClassConfig cfg = unconstrained();
        cfg.s_min = 0.5;
        cfg.s_max = 2.0;
        for (int i = 0; i < 2000; ++i) {
            const Rect src = sample_source_rect(img, nullptr, cfg, rng);
            const auto p = sample_destination(img, nullptr, src, nullptr, cfg, rng);
            REQUIRE(p.scale >= cfg.s_min);
            REQUIRE(p.scale <= cfg.s_max);
            REQUIRE(p.dst_rect.width_frac >= cfg.w_min - 1e-12);
            REQUIRE(p.dst_rect.width_frac <= cfg.w_max + 1e-12);
            REQUIRE(p.dst_rect.height_frac >= cfg.h_min - 1e-12);
            REQUIRE(p.dst_rect.height_frac <= cfg.h_max + 1e-12);
        }
    }

    SUBCASE("destination rect keeps the 1-pixel blending margin") {
        ClassConfig cfg = bottle_like();
        for (int i = 0; i < 500; ++i) {
            try {
                const auto p = place_one(img, &mask, img, &mask, cfg, rng);
                const PixelRect pr = p.dst_rect.to_pixels(64, 64);
                REQUIRE(pr.x >= 1);
                REQUIRE(pr.y >= 1);
                REQUIRE(pr.x + pr.w <= 63);
                REQUIRE(pr.y + pr.h <= 63);
            } catch (const PlacementError&) {
            }
        }
    }
}

TEST_CASE("multi-patch coin flips") {
    const auto img = testutil::object_scene(48, 200, 40);

    SUBCASE("n_max = 1 always yields one placement") {
        RngStream rng(37);
        ClassConfig cfg = unconstrained();
        cfg.n_max = 1;
        for (int i = 0; i < 50; ++i)
            CHECK(sample_placements(img, img, cfg, rng).size() == 1);
    }

    SUBCASE("n_max = 3 mean count approaches 2") {
        RngStream rng(38);
        ClassConfig cfg = unconstrained();
        cfg.n_max = 3;
        long long total = 0;
        const int trials = 20000;
        for (int i = 0; i < trials; ++i)
            total += static_cast<long long>(sample_placements(img, img, cfg, rng).size());
        CHECK(static_cast<double>(total) / trials == doctest::Approx(2.0).epsilon(0.02));
    }

    SUBCASE("n_max = 4 counts stay in range") {
        RngStream rng(39);
        ClassConfig cfg = unconstrained();
        cfg.n_max = 4;
        std::set<std::size_t> seen;
        for (int i = 0; i < 2000; ++i) {
            const auto n = sample_placements(img, img, cfg, rng).size();
            REQUIRE(n >= 1);
            REQUIRE(n <= 4);
            seen.insert(n);
        }
        CHECK(seen.size() == 4);
    }
}

TEST_CASE("cutpaste-style selection obeys its published bounds") {
    RngStream rng(40);
    const ImagePlane img(128, 128, 1, 0.5f);
    double area_sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto p = sample_cutpaste_style(img, rng);
        const double area_ratio = p.src_rect.width_frac * p.src_rect.height_frac;
        const double aspect = (p.src_rect.width_frac * 128.0) / (p.src_rect.height_frac * 128.0);
        REQUIRE(area_ratio > 0.02);
        REQUIRE(area_ratio < 0.15);
        REQUIRE(aspect > 0.3);
        REQUIRE(aspect < 3.3);
        REQUIRE(p.scale == 1.0);
        // whole patch inside the image
        const PixelRect sr = p.src_rect.to_pixels(128, 128);
        REQUIRE(sr.x >= 0);
        REQUIRE(sr.x + sr.w <= 128);
        area_sum += area_ratio;
    }
    CHECK(area_sum / n == doctest::Approx(0.085).epsilon(0.02));
}

TEST_CASE("ellipse union masks are non-empty and bounded") {
    RngStream rng(41);
    for (int i = 0; i < 2000; ++i) {
        const int w = 3 + static_cast<int>(rng.uniform_index(40));
        const int h = 3 + static_cast<int>(rng.uniform_index(40));
        const auto mask = ellipse_union_mask(w, h, 5, rng);
        REQUIRE(mask.width == w);
        REQUIRE(mask.height == h);
        REQUIRE(mask.count() >= 1);
        REQUIRE(mask.count() <= static_cast<std::size_t>(w) * h);
    }
    CHECK_THROWS_AS(ellipse_union_mask(2, 5, 5, rng), std::invalid_argument);
}

TEST_CASE("fpi-style placements share one location") {
    RngStream rng(42);
    const auto img = testutil::object_scene(64, 200, 40);
    const auto mask = object_mask(img, 200, 60);
    ClassConfig cfg = bottle_like();
    for (int i = 0; i < 200; ++i) {
        try {
            const auto p = sample_fpi_style(img, &mask, img, &mask, cfg, rng);
            CHECK(p.src_rect.center_x == p.dst_rect.center_x);
            CHECK(p.src_rect.center_y == p.dst_rect.center_y);
            CHECK(p.scale == 1.0);
            const PixelRect pr = p.dst_rect.to_pixels(64, 64);
            CHECK(pr.x >= 1);
            CHECK(pr.y >= 1);
            CHECK(pr.x + pr.w <= 63);
            CHECK(pr.y + pr.h <= 63);
        } catch (const PlacementError&) {
        }
    }
}

TEST_CASE("placement sampling is deterministic in the seed") {
    const auto img_s = testutil::object_scene(48, 200, 40);
    const auto img_d = testutil::object_scene(48, 200, 60);
    ClassConfig cfg = bottle_like();
    cfg.shape_mode = ShapeMode::ellipse_union;

    RngStream a(1234), b(1234);
    const auto pa = sample_placements(img_s, img_d, cfg, a);
    const auto pb = sample_placements(img_s, img_d, cfg, b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].src_rect.center_x == pb[i].src_rect.center_x);
        CHECK(pa[i].dst_rect.center_y == pb[i].dst_rect.center_y);
        CHECK(pa[i].scale == pb[i].scale);
        CHECK(pa[i].shape_mask.has_value() == pb[i].shape_mask.has_value());
        if (pa[i].shape_mask) CHECK(pa[i].shape_mask->bits == pb[i].shape_mask->bits);
    }
}

TEST_CASE("config validation rejects bad bounds") {
    ClassConfig cfg;
    cfg.w_min = 0.5;
    cfg.w_max = 0.2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = ClassConfig{};
    cfg.s_min = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = ClassConfig{};
    cfg.n_max = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = ClassConfig{};
    cfg.background = BackgroundConstraints{300.0, 60.0, 0.7, 0.25};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
