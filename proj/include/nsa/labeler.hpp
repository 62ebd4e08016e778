#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nsa/image.hpp"
#include "nsa/math.hpp"
#include "nsa/poisson.hpp"
#include "nsa/sampler.hpp"

namespace nsa::labeler {

enum class LabelKind { binary, continuous, logistic, interpolation };

// Pixel-wise label. Binary/logistic/interpolation values live in [0, 1];
// continuous values are mean absolute differences in 8-bit intensity units.
struct LabelMap {
    int width = 0;
    int height = 0;
    LabelKind kind = LabelKind::binary;
    std::vector<double> values;

    LabelMap() = default;
    LabelMap(int w, int h, LabelKind k)
        : width(w), height(h), kind(k), values(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    void set(int x, int y, double v) { values[static_cast<std::size_t>(y) * width + x] = v; }
};

// A changed pixel is one that moved by more than half an 8-bit quantization
// step in any channel.
inline constexpr double kBinaryEpsilon = 0.5 / 255.0;
inline constexpr int kDefaultFilterWindow = 5;

namespace detail {

inline void median_filter_plane(std::vector<double>& plane, int width, int height, int window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("median filter window must be odd and >= 1");
    if (window == 1) return;
    const int half = window / 2;
    std::vector<double> out(plane.size());
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(window) * window);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            vals.clear();
            for (int dy = -half; dy <= half; ++dy)
                for (int dx = -half; dx <= half; ++dx) {
                    const int sx = std::clamp(x + dx, 0, width - 1);
                    const int sy = std::clamp(y + dy, 0, height - 1);
                    vals.push_back(plane[static_cast<std::size_t>(sy) * width + sx]);
                }
            auto mid = vals.begin() + vals.size() / 2;
            std::nth_element(vals.begin(), mid, vals.end());
            out[static_cast<std::size_t>(y) * width + x] = *mid;
        }
    plane = std::move(out);
}

inline void require_same_shape(const ImagePlane& a, const ImagePlane& b, const char* op) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

inline double binary_value(const ImagePlane& blended, const ImagePlane& original, int x, int y) {
    for (int c = 0; c < blended.channels(); ++c)
        if (std::abs(static_cast<double>(blended.at(x, y, c)) - original.at(x, y, c)) >
            kBinaryEpsilon)
            return 1.0;
    return 0.0;
}

inline double continuous_value(const ImagePlane& blended, const ImagePlane& original, int x,
                               int y) {
    double sum = 0.0;
    for (int c = 0; c < blended.channels(); ++c)
        sum += std::abs(static_cast<double>(blended.at(x, y, c)) - original.at(x, y, c));
    return 255.0 * sum / blended.channels();
}

}  // namespace detail

// Binary label: 1 where the blend changed the pixel, median filtered.
inline LabelMap label_binary(const ImagePlane& blended, const ImagePlane& original,
                             int filter_window = kDefaultFilterWindow) {
    detail::require_same_shape(blended, original, "label_binary");
    LabelMap map(blended.width(), blended.height(), LabelKind::binary);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            map.set(x, y, detail::binary_value(blended, original, x, y));
    detail::median_filter_plane(map.values, map.width, map.height, filter_window);
    return map;
}

// Continuous label: channel-mean absolute difference in 8-bit units, median
// filtered.
inline LabelMap label_continuous(const ImagePlane& blended, const ImagePlane& original,
                                 int filter_window = kDefaultFilterWindow) {
    detail::require_same_shape(blended, original, "label_continuous");
    LabelMap map(blended.width(), blended.height(), LabelKind::continuous);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            map.set(x, y, detail::continuous_value(blended, original, x, y));
    detail::median_filter_plane(map.values, map.width, map.height, filter_window);
    return map;
}

// Logistic label: binary gate times a logistic of the continuous difference,
// composed per pixel before the median filter.
inline LabelMap label_logistic(const ImagePlane& blended, const ImagePlane& original, double y0,
                               double k, int filter_window = kDefaultFilterWindow) {
    detail::require_same_shape(blended, original, "label_logistic");
    if (k <= 0.0) throw std::invalid_argument("label_logistic: k must be > 0");
    LabelMap map(blended.width(), blended.height(), LabelKind::logistic);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            const double gate = detail::binary_value(blended, original, x, y);
            if (gate == 0.0) continue;
            const double cont = detail::continuous_value(blended, original, x, y);
            map.set(x, y, gate / (1.0 + nsa::detail::portable_exp(-k * (cont - y0))));
        }
    detail::median_filter_plane(map.values, map.width, map.height, filter_window);
    return map;
}

// NSA blending: seamlessly clone every placement into the destination in
// order. Labels are computed afterwards against the pristine destination.
inline ImagePlane blend_nsa(const ImagePlane& img_s, const ImagePlane& img_d,
                            const std::vector<sampler::PatchPlacement>& placements,
                            poisson::GradientMode mode, double tolerance = 1e-5,
                            int max_iter = 0) {
    ImagePlane out = img_d;
    for (const auto& p : placements)
        out = poisson::seamless_clone(img_s, out, p.src_rect, p.dst_rect, mode,
                                      p.shape_mask ? &*p.shape_mask : nullptr, tolerance,
                                      max_iter);
    return out;
}

// FPI: linear interpolation toward the foreign patch at the same location;
// the label is the interpolation factor itself, uniform on the patch.
inline std::pair<ImagePlane, LabelMap> blend_fpi(const ImagePlane& img_s, const ImagePlane& img_d,
                                                 const sampler::PatchPlacement& placement,
                                                 double alpha) {
    detail::require_same_shape(img_s, img_d, "blend_fpi");
    const PixelRect sr = placement.src_rect.to_pixels(img_s.width(), img_s.height());
    const PixelRect dr = placement.dst_rect.to_pixels(img_d.width(), img_d.height());
    if (sr.x != dr.x || sr.y != dr.y || sr.w != dr.w || sr.h != dr.h)
        throw std::invalid_argument("blend_fpi: placement must use the same location");

    ImagePlane out = img_d;
    LabelMap label(img_d.width(), img_d.height(), LabelKind::interpolation);
    for (int y = dr.y; y < dr.y + dr.h; ++y)
        for (int x = dr.x; x < dr.x + dr.w; ++x) {
            for (int c = 0; c < img_d.channels(); ++c)
                out.at(x, y, c) = clamp01(static_cast<float>(
                    (1.0 - alpha) * img_d.at(x, y, c) + alpha * img_s.at(x, y, c)));
            label.set(x, y, alpha);
        }
    return {std::move(out), std::move(label)};
}

// CutPaste: overwrite the destination rect with the resized source patch;
// binary label on the rect regardless of pixel differences.
inline std::pair<ImagePlane, LabelMap> blend_cutpaste(const ImagePlane& img_s,
                                                      const ImagePlane& img_d,
                                                      const sampler::PatchPlacement& placement) {
    if (img_s.channels() != img_d.channels())
        throw std::invalid_argument("blend_cutpaste: channel mismatch");
    const PixelRect sr = placement.src_rect.to_pixels(img_s.width(), img_s.height());
    const PixelRect dr = placement.dst_rect.to_pixels(img_d.width(), img_d.height());

    ImagePlane out = img_d;
    paste(out, resize_bilinear(crop(img_s, sr), dr.w, dr.h), dr.x, dr.y);

    LabelMap label(img_d.width(), img_d.height(), LabelKind::binary);
    for (int y = dr.y; y < dr.y + dr.h; ++y)
        for (int x = dr.x; x < dr.x + dr.w; ++x) label.set(x, y, 1.0);
    return {std::move(out), std::move(label)};
}

// PII: seamlessly clone the alpha-interpolated patch (mixed gradients) at the
// same location; the label is the factor on the clone interior.
inline std::pair<ImagePlane, LabelMap> blend_pii(const ImagePlane& img_s, const ImagePlane& img_d,
                                                 const sampler::PatchPlacement& placement,
                                                 double alpha, double tolerance = 1e-5,
                                                 int max_iter = 0) {
    detail::require_same_shape(img_s, img_d, "blend_pii");
    const PixelRect sr = placement.src_rect.to_pixels(img_s.width(), img_s.height());
    const PixelRect dr = placement.dst_rect.to_pixels(img_d.width(), img_d.height());
    if (sr.x != dr.x || sr.y != dr.y || sr.w != dr.w || sr.h != dr.h)
        throw std::invalid_argument("blend_pii: placement must use the same location");

    ImagePlane interp = img_d;
    for (int y = dr.y; y < dr.y + dr.h; ++y)
        for (int x = dr.x; x < dr.x + dr.w; ++x)
            for (int c = 0; c < img_d.channels(); ++c)
                interp.at(x, y, c) = clamp01(static_cast<float>(
                    (1.0 - alpha) * img_d.at(x, y, c) + alpha * img_s.at(x, y, c)));

    ImagePlane out = poisson::seamless_clone(interp, img_d, placement.dst_rect,
                                             placement.dst_rect, poisson::GradientMode::mixed,
                                             nullptr, tolerance, max_iter);

    LabelMap label(img_d.width(), img_d.height(), LabelKind::interpolation);
    for (int y = dr.y + 1; y < dr.y + dr.h - 1; ++y)
        for (int x = dr.x + 1; x < dr.x + dr.w - 1; ++x) label.set(x, y, alpha);
    return {std::move(out), std::move(label)};
}

}  // namespace nsa::labeler
