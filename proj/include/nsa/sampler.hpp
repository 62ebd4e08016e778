#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nsa/errors.hpp"
#include "nsa/image.hpp"
#include "nsa/poisson.hpp"
#include "nsa/rng.hpp"

namespace nsa::sampler {

enum class ShapeMode { rect, ellipse_union };
enum class SelectionMode { nsa, cutpaste_style, fpi_style };

// Foreground constraint block. Disabled classes (the N/A rows) omit it.
struct BackgroundConstraints {
    double background_b = 0.0;   // 8-bit background brightness
    double t_brightness = 0.0;   // 8-bit mask threshold
    double t_object = 0.0;       // min object fraction of a patch
    double t_overlap = 0.0;      // min fraction of resized source object landing on object
};

// Per-class hyperparameters for the self-supervised task.
struct ClassConfig {
    std::string name;
    int n_max = 3;
    double h_min = 0.06, h_max = 0.80;
    double w_min = 0.06, w_max = 0.80;
    std::optional<BackgroundConstraints> background;
    double s_min = 0.7, s_max = 1.3;
    double logistic_y0 = 7.0;          // 8-bit intensity units
    double logistic_k = 1.0 / 3.0;     // 1 / intensity
    poisson::GradientMode gradient_mode = poisson::GradientMode::source;
    ShapeMode shape_mode = ShapeMode::rect;
    SelectionMode selection_mode = SelectionMode::nsa;

    bool constraints_enabled() const { return background.has_value(); }

    void validate() const {
        if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
        if (!(0.0 < w_min && w_min <= w_max && w_max <= 1.0))
            throw std::invalid_argument("require 0 < w_min <= w_max <= 1");
        if (!(0.0 < h_min && h_min <= h_max && h_max <= 1.0))
            throw std::invalid_argument("require 0 < h_min <= h_max <= 1");
        if (!(s_min <= 1.0 && 1.0 <= s_max))
            throw std::invalid_argument("require s_min <= 1 <= s_max");
        if (logistic_k <= 0.0) throw std::invalid_argument("logistic k must be > 0");
        if (background) {
            const auto& bg = *background;
            if (bg.background_b < 0.0 || bg.background_b > 255.0)
                throw std::invalid_argument("background_b must be in [0, 255]");
            if (bg.t_brightness < 0.0 || bg.t_brightness > 255.0)
                throw std::invalid_argument("t_brightness must be in [0, 255]");
            if (bg.t_object < 0.0 || bg.t_object > 1.0)
                throw std::invalid_argument("t_object must be in [0, 1]");
            if (bg.t_overlap < 0.0 || bg.t_overlap > 1.0)
                throw std::invalid_argument("t_overlap must be in [0, 1]");
        }
    }
};

// One accepted source -> destination assignment.
struct PatchPlacement {
    Rect src_rect;
    Rect dst_rect;
    double scale = 1.0;
    std::optional<BinaryMask> shape_mask;  // sized to the destination pixel rect
    int source_tries = 1;
    int dest_tries = 1;
};

// Bound on every constrained rejection loop.
inline constexpr int kRetryBudget = 200;

namespace detail {

inline double object_fraction(const BinaryMask& mask, const PixelRect& r) {
    long long inside = 0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x)
            if (mask.at(x, y)) ++inside;
    return static_cast<double>(inside) / static_cast<double>(r.area());
}

// Fraction of set pixels of `patch_obj` that land on set pixels of `image_mask`
// when the patch is placed at rectangle r. Returns 0 for an empty patch mask.
inline double overlap_fraction(const BinaryMask& image_mask, const PixelRect& r,
                               const BinaryMask& patch_obj) {
    long long total = 0, hit = 0;
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            if (patch_obj.at(x, y)) {
                ++total;
                if (image_mask.at(r.x + x, r.y + y)) ++hit;
            }
    if (total == 0) return 0.0;
    return static_cast<double>(hit) / static_cast<double>(total);
}

inline BinaryMask crop_mask(const BinaryMask& mask, const PixelRect& r) {
    BinaryMask out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) out.set(x, y, mask.at(r.x + x, r.y + y));
    return out;
}

// Re-anchors the fractional rect so its rasterization keeps at least `margin`
// pixels to every border. The pixel size is unchanged; the center is snapped
// to the adjusted pixel rect (exactly reproduced on re-rasterization).
inline Rect snap_with_margin(const Rect& rect, int W, int H, int margin) {
    PixelRect r = rect.to_pixels(W, H);
    r.x = std::clamp(r.x, margin, std::max(margin, W - margin - r.w));
    r.y = std::clamp(r.y, margin, std::max(margin, H - margin - r.h));
    Rect out = rect;
    out.center_x = (r.x + r.w / 2.0) / W;
    out.center_y = (r.y + r.h / 2.0) / H;
    return out;
}

}  // namespace detail

// Patch side fractions: clamp(0.06 + Gamma(2, 0.1), min, max), width then
// height, independently.
inline std::pair<double, double> sample_patch_size(const ClassConfig& cfg, RngStream& rng) {
    const double w = std::clamp(0.06 + rng.gamma2(0.1), cfg.w_min, cfg.w_max);
    const double h = std::clamp(0.06 + rng.gamma2(0.1), cfg.h_min, cfg.h_max);
    return {w, h};
}

// Source patch: size from the truncated Gamma, center uniform with w_min/2
// margins, centers redrawn until the patch covers enough of the object.
inline Rect sample_source_rect(const ImagePlane& img, const BinaryMask* mask,
                               const ClassConfig& cfg, RngStream& rng,
                               int* tries_out = nullptr) {
    const bool constrained = cfg.constraints_enabled();
    if (constrained && mask == nullptr)
        throw std::invalid_argument("sample_source_rect: constraints need an object mask");

    const auto [w, h] = sample_patch_size(cfg, rng);
    Rect rect;
    rect.width_frac = w;
    rect.height_frac = h;
    for (int attempt = 1; attempt <= kRetryBudget; ++attempt) {
        rect.center_x = rng.uniform(cfg.w_min / 2.0, 1.0 - cfg.w_min / 2.0);
        rect.center_y = rng.uniform(cfg.h_min / 2.0, 1.0 - cfg.h_min / 2.0);
        if (!constrained ||
            detail::object_fraction(*mask, rect.to_pixels(img.width(), img.height())) >
                cfg.background->t_object) {
            if (tries_out) *tries_out = attempt;
            return rect;
        }
    }
    throw PlacementError("source patch: object fraction constraint (t_object=" +
                         std::to_string(cfg.background->t_object) + ") not met after " +
                         std::to_string(kRetryBudget) + " tries");
}

// Destination patch for a sampled source rect: one scale draw (clipped to the
// class bounds), then centers redrawn until the patch covers the object and
// the resized source object lands on it.
inline PatchPlacement sample_destination(const ImagePlane& img_d, const BinaryMask* mask_d,
                                         const Rect& src_rect, const BinaryMask* src_patch_obj,
                                         const ClassConfig& cfg, RngStream& rng) {
    const bool constrained = cfg.constraints_enabled();
    if (constrained && (mask_d == nullptr || src_patch_obj == nullptr))
        throw std::invalid_argument("sample_destination: constraints need object masks");

    const double w = src_rect.width_frac, h = src_rect.height_frac;
    const double r_s = rng.normal(1.0, 0.25);
    double s = std::max({cfg.w_min / w, cfg.h_min / h,
                         std::min({r_s, cfg.w_max / w, cfg.h_max / h})});
    s = std::clamp(s, cfg.s_min, cfg.s_max);

    PatchPlacement placement;
    placement.src_rect = src_rect;
    placement.scale = s;
    placement.dst_rect.width_frac = s * w;
    placement.dst_rect.height_frac = s * h;

    const int W = img_d.width(), H = img_d.height();
    const double margin_x = placement.dst_rect.width_frac / 2.0 + 1.0 / W;
    const double margin_y = placement.dst_rect.height_frac / 2.0 + 1.0 / H;

    // Resize the source-patch object mask once per scale draw.
    BinaryMask resized_obj;
    if (constrained) {
        PixelRect probe = placement.dst_rect.to_pixels(W, H);
        resized_obj = resize_nearest(*src_patch_obj, probe.w, probe.h);
    }

    for (int attempt = 1; attempt <= kRetryBudget; ++attempt) {
        placement.dst_rect.center_x =
            margin_x < 1.0 - margin_x ? rng.uniform(margin_x, 1.0 - margin_x) : 0.5;
        placement.dst_rect.center_y =
            margin_y < 1.0 - margin_y ? rng.uniform(margin_y, 1.0 - margin_y) : 0.5;
        placement.dest_tries = attempt;
        if (!constrained) return placement;
        const PixelRect pr = placement.dst_rect.to_pixels(W, H);
        if (detail::object_fraction(*mask_d, pr) > cfg.background->t_object &&
            detail::overlap_fraction(*mask_d, pr, resized_obj) > cfg.background->t_overlap)
            return placement;
    }
    throw PlacementError("destination patch: object/overlap constraints (t_object=" +
                         std::to_string(cfg.background->t_object) + ", t_overlap=" +
                         std::to_string(cfg.background->t_overlap) + ") not met after " +
                         std::to_string(kRetryBudget) + " tries");
}

// Same-location placement used by the FPI/PII baselines: the source rect also
// serves as the destination, no resize. Both patch constraints are checked at
// that single location.
inline PatchPlacement sample_fpi_style(const ImagePlane& img_s, const BinaryMask* mask_s,
                                       const ImagePlane& img_d, const BinaryMask* mask_d,
                                       const ClassConfig& cfg, RngStream& rng) {
    if (img_s.width() != img_d.width() || img_s.height() != img_d.height())
        throw std::invalid_argument("sample_fpi_style: images must share dimensions");
    const bool constrained = cfg.constraints_enabled();
    const auto [w, h] = sample_patch_size(cfg, rng);
    const int W = img_d.width(), H = img_d.height();

    Rect rect;
    rect.width_frac = w;
    rect.height_frac = h;
    for (int attempt = 1; attempt <= kRetryBudget; ++attempt) {
        rect.center_x = rng.uniform(cfg.w_min / 2.0, 1.0 - cfg.w_min / 2.0);
        rect.center_y = rng.uniform(cfg.h_min / 2.0, 1.0 - cfg.h_min / 2.0);
        Rect snapped = detail::snap_with_margin(rect, W, H, 1);
        const PixelRect pr = snapped.to_pixels(W, H);
        bool ok = true;
        if (constrained) {
            ok = detail::object_fraction(*mask_s, pr) > cfg.background->t_object &&
                 detail::object_fraction(*mask_d, pr) > cfg.background->t_object;
            if (ok && cfg.background->t_overlap > 0.0) {
                const BinaryMask src_obj = detail::crop_mask(*mask_s, pr);
                ok = detail::overlap_fraction(*mask_d, pr, src_obj) > cfg.background->t_overlap;
            }
        }
        if (ok) {
            PatchPlacement placement;
            placement.src_rect = snapped;
            placement.dst_rect = snapped;
            placement.scale = 1.0;
            placement.source_tries = attempt;
            placement.dest_tries = attempt;
            return placement;
        }
    }
    throw PlacementError("same-location patch: constraints not met after " +
                         std::to_string(kRetryBudget) + " tries");
}

// CutPaste-style patch selection: area ratio uniform in (0.02, 0.15), aspect
// ratio uniform on (0.3, 1) u (1, 3.3) weighted by interval length, source and
// destination locations uniform with the whole patch inside the image. No
// constraints, no resize.
inline PatchPlacement sample_cutpaste_style(const ImagePlane& img, RngStream& rng) {
    const int W = img.width(), H = img.height();
    if (0.02 * W * H < 1.0)
        throw std::invalid_argument("sample_cutpaste_style: image too small");

    const double area_ratio = rng.uniform(0.02, 0.15);
    const double u = rng.uniform(0.0, 3.0);
    const double aspect = u < 0.7 ? 0.3 + u : 1.0 + (u - 0.7);

    const double area_px = area_ratio * W * H;
    const double w_px = std::min(std::sqrt(area_px * aspect), static_cast<double>(W));
    const double h_px = std::min(std::sqrt(area_px / aspect), static_cast<double>(H));

    PatchPlacement placement;
    placement.scale = 1.0;
    placement.src_rect.width_frac = w_px / W;
    placement.src_rect.height_frac = h_px / H;
    placement.dst_rect.width_frac = w_px / W;
    placement.dst_rect.height_frac = h_px / H;

    const int wi = std::max(1, static_cast<int>(std::lround(w_px)));
    const int hi = std::max(1, static_cast<int>(std::lround(h_px)));
    placement.src_rect.center_x = rng.uniform(wi / 2.0, W - wi / 2.0) / W;
    placement.src_rect.center_y = rng.uniform(hi / 2.0, H - hi / 2.0) / H;
    placement.dst_rect.center_x = rng.uniform(wi / 2.0, W - wi / 2.0) / W;
    placement.dst_rect.center_y = rng.uniform(hi / 2.0, H - hi / 2.0) / H;
    return placement;
}

// Union of `count` random axis-aligned ellipses inside a rect of the given
// pixel size: centers uniform in the rect, semi-axes uniform in 10-50% of the
// rect dimensions. Resampled whole if it comes out empty.
inline BinaryMask ellipse_union_mask(int rect_w, int rect_h, int count, RngStream& rng) {
    if (rect_w < 3 || rect_h < 3)
        throw std::invalid_argument("ellipse_union_mask: rect must be at least 3x3");
    for (int attempt = 0; attempt < 64; ++attempt) {
        BinaryMask mask(rect_w, rect_h);
        for (int i = 0; i < count; ++i) {
            const double cx = rng.uniform(0.0, rect_w);
            const double cy = rng.uniform(0.0, rect_h);
            const double a = rng.uniform(0.1 * rect_w, 0.5 * rect_w);
            const double b = rng.uniform(0.1 * rect_h, 0.5 * rect_h);
            for (int y = 0; y < rect_h; ++y)
                for (int x = 0; x < rect_w; ++x) {
                    const double dx = (x + 0.5 - cx) / a;
                    const double dy = (y + 0.5 - cy) / b;
                    if (dx * dx + dy * dy <= 1.0) mask.set(x, y, true);
                }
        }
        if (!mask.empty()) return mask;
    }
    BinaryMask mask(rect_w, rect_h);
    mask.set(rect_w / 2, rect_h / 2, true);
    return mask;
}

inline BinaryMask ellipse_union_mask(const Rect& rect, int image_w, int image_h, int count,
                                     RngStream& rng) {
    const PixelRect r = rect.to_pixels(image_w, image_h);
    return ellipse_union_mask(r.w, r.h, count, rng);
}

// One full source + destination placement. Object masks may be null when the
// class has no foreground constraints.
inline PatchPlacement place_one(const ImagePlane& img_s, const BinaryMask* mask_s,
                                const ImagePlane& img_d, const BinaryMask* mask_d,
                                const ClassConfig& cfg, RngStream& rng) {
    int source_tries = 1;
    const Rect src_rect = sample_source_rect(img_s, mask_s, cfg, rng, &source_tries);

    std::optional<BinaryMask> src_patch_obj;
    if (cfg.constraints_enabled())
        src_patch_obj = detail::crop_mask(*mask_s, src_rect.to_pixels(img_s.width(), img_s.height()));

    PatchPlacement placement = sample_destination(
        img_d, mask_d, src_rect, src_patch_obj ? &*src_patch_obj : nullptr, cfg, rng);
    placement.source_tries = source_tries;

    if (cfg.shape_mode == ShapeMode::ellipse_union) {
        const PixelRect dr = placement.dst_rect.to_pixels(img_d.width(), img_d.height());
        if (dr.w >= 3 && dr.h >= 3)
            placement.shape_mask = ellipse_union_mask(dr.w, dr.h, 5, rng);
    }
    return placement;
}

// Full multi-patch sampling: one mandatory placement, then n_max - 1
// independent fair coins each adding one more. A failed extra placement is
// skipped; a failed first placement is fatal.
inline std::vector<PatchPlacement> sample_placements(const ImagePlane& img_s,
                                                     const ImagePlane& img_d,
                                                     const ClassConfig& cfg, RngStream& rng) {
    cfg.validate();

    std::optional<BinaryMask> mask_s, mask_d;
    if (cfg.constraints_enabled()) {
        mask_s = object_mask(img_s, cfg.background->background_b, cfg.background->t_brightness);
        mask_d = object_mask(img_d, cfg.background->background_b, cfg.background->t_brightness);
    }
    const BinaryMask* ms = mask_s ? &*mask_s : nullptr;
    const BinaryMask* md = mask_d ? &*mask_d : nullptr;

    std::vector<PatchPlacement> placements;
    placements.push_back(place_one(img_s, ms, img_d, md, cfg, rng));
    for (int i = 0; i < cfg.n_max - 1; ++i) {
        if (!rng.coin()) continue;
        try {
            placements.push_back(place_one(img_s, ms, img_d, md, cfg, rng));
        } catch (const PlacementError&) {
            // extra patches are best-effort
        }
    }
    return placements;
}

}  // namespace nsa::sampler
