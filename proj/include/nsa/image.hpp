#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nsa/math.hpp"
#include "nsa/rng.hpp"

namespace nsa {

// Row-major H x W x C image with float samples in [0, 1]. Every public
// operation keeps samples inside that range.
class ImagePlane {
public:
    ImagePlane() = default;

    ImagePlane(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 1 || height < 1 || (channels != 1 && channels != 3))
            throw std::invalid_argument("ImagePlane: bad dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }

    float at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    float& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    // Channel mean at a pixel, the brightness used for object masks.
    float brightness(int x, int y) const {
        float sum = 0.0f;
        for (int c = 0; c < channels_; ++c) sum += at(x, y, c);
        return sum / static_cast<float>(channels_);
    }

    bool same_shape(const ImagePlane& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

// One boolean per pixel; dimensions always match the image it annotates.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h),
          bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }

    bool empty() const { return count() == 0; }
};

// Integer rectangle in pixel coordinates, [x, x+w) x [y, y+h).
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool contains(int px, int py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    long long area() const { return static_cast<long long>(w) * h; }
};

// Fractional rectangle: center and size as fractions of the image dimensions.
// Rasterization rule: pixel size = max(1, round(frac * dim)), top-left =
// round(center - size / 2), then clamped so the rectangle stays in bounds.
struct Rect {
    double center_x = 0.5;
    double center_y = 0.5;
    double width_frac = 0.0;
    double height_frac = 0.0;

    PixelRect to_pixels(int image_width, int image_height) const {
        PixelRect r;
        r.w = std::max(1, static_cast<int>(std::lround(width_frac * image_width)));
        r.h = std::max(1, static_cast<int>(std::lround(height_frac * image_height)));
        r.w = std::min(r.w, image_width);
        r.h = std::min(r.h, image_height);
        r.x = static_cast<int>(std::lround(center_x * image_width - r.w / 2.0));
        r.y = static_cast<int>(std::lround(center_y * image_height - r.h / 2.0));
        r.x = std::clamp(r.x, 0, image_width - r.w);
        r.y = std::clamp(r.y, 0, image_height - r.h);
        return r;
    }
};

inline float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

// Object mask: pixels whose 8-bit brightness differs from the background
// constant by at least the threshold. This is the complement of the
// background mask |x - b| < t.
inline BinaryMask object_mask(const ImagePlane& image, double background_brightness,
                              double threshold) {
    BinaryMask mask(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const double v = 255.0 * image.brightness(x, y);
            mask.set(x, y, std::abs(v - background_brightness) >= threshold);
        }
    return mask;
}

// Median filter with edge replication. Window must be odd.
inline ImagePlane median_filter(const ImagePlane& map, int window) {
    if (map.channels() != 1)
        throw std::invalid_argument("median_filter: single-channel maps only");
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("median_filter: window must be odd and >= 1");
    if (window == 1) return map;

    const int w = map.width(), h = map.height(), half = window / 2;
    ImagePlane out(w, h, 1);
    std::vector<float> vals;
    vals.reserve(static_cast<std::size_t>(window) * window);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            vals.clear();
            for (int dy = -half; dy <= half; ++dy)
                for (int dx = -half; dx <= half; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    vals.push_back(map.at(sx, sy));
                }
            auto mid = vals.begin() + vals.size() / 2;
            std::nth_element(vals.begin(), mid, vals.end());
            out.at(x, y) = *mid;
        }
    return out;
}

namespace detail {

// Bilinear sample with the half-pixel-center convention and edge clamping.
inline float bilinear_sample(const ImagePlane& img, double sx, double sy, int c) {
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0;
    const double fy = sy - y0;
    const int xa = std::clamp(x0, 0, img.width() - 1);
    const int xb = std::clamp(x0 + 1, 0, img.width() - 1);
    const int ya = std::clamp(y0, 0, img.height() - 1);
    const int yb = std::clamp(y0 + 1, 0, img.height() - 1);
    const double top = img.at(xa, ya, c) * (1.0 - fx) + img.at(xb, ya, c) * fx;
    const double bot = img.at(xa, yb, c) * (1.0 - fx) + img.at(xb, yb, c) * fx;
    return clamp01(static_cast<float>(top * (1.0 - fy) + bot * fy));
}

}  // namespace detail

inline ImagePlane resize_bilinear(const ImagePlane& image, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw std::invalid_argument("resize_bilinear: dimensions must be >= 1");
    if (new_width == image.width() && new_height == image.height()) return image;

    ImagePlane out(new_width, new_height, image.channels());
    const double scale_x = static_cast<double>(image.width()) / new_width;
    const double scale_y = static_cast<double>(image.height()) / new_height;
    for (int y = 0; y < new_height; ++y) {
        const double sy = (y + 0.5) * scale_y - 0.5;
        for (int x = 0; x < new_width; ++x) {
            const double sx = (x + 0.5) * scale_x - 0.5;
            for (int c = 0; c < image.channels(); ++c)
                out.at(x, y, c) = detail::bilinear_sample(image, sx, sy, c);
        }
    }
    return out;
}

// Nearest-neighbor mask resize (used for the resized source object mask).
inline BinaryMask resize_nearest(const BinaryMask& mask, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw std::invalid_argument("resize_nearest: dimensions must be >= 1");
    BinaryMask out(new_width, new_height);
    for (int y = 0; y < new_height; ++y) {
        int sy = std::min(mask.height - 1,
                          static_cast<int>((y + 0.5) * mask.height / new_height));
        for (int x = 0; x < new_width; ++x) {
            int sx = std::min(mask.width - 1,
                              static_cast<int>((x + 0.5) * mask.width / new_width));
            out.set(x, y, mask.at(sx, sy));
        }
    }
    return out;
}

inline ImagePlane crop(const ImagePlane& image, const PixelRect& r) {
    if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > image.width() ||
        r.y + r.h > image.height())
        throw std::invalid_argument("crop: rectangle out of bounds");
    ImagePlane out(r.w, r.h, image.channels());
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < image.channels(); ++c)
                out.at(x, y, c) = image.at(r.x + x, r.y + y, c);
    return out;
}

inline void paste(ImagePlane& dst, const ImagePlane& patch, int x0, int y0) {
    if (x0 < 0 || y0 < 0 || x0 + patch.width() > dst.width() ||
        y0 + patch.height() > dst.height() || patch.channels() != dst.channels())
        throw std::invalid_argument("paste: patch out of bounds");
    for (int y = 0; y < patch.height(); ++y)
        for (int x = 0; x < patch.width(); ++x)
            for (int c = 0; c < dst.channels(); ++c)
                dst.at(x0 + x, y0 + y, c) = patch.at(x, y, c);
}

// Rotation about the image center with bilinear resampling and edge
// replication; output has the same dimensions.
inline ImagePlane rotate(const ImagePlane& image, double degrees) {
    if (degrees == 0.0) return image;
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double c = nsa::detail::portable_cos(rad);
    const double s = nsa::detail::portable_sin(rad);
    const double cx = (image.width() - 1) / 2.0;
    const double cy = (image.height() - 1) / 2.0;

    ImagePlane out(image.width(), image.height(), image.channels());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const double dx = x - cx, dy = y - cy;
            // inverse map: rotate output coords by -angle
            const double sx = cx + c * dx + s * dy;
            const double sy = cy - s * dx + c * dy;
            for (int ch = 0; ch < image.channels(); ++ch)
                out.at(x, y, ch) = detail::bilinear_sample(image, sx, sy, ch);
        }
    return out;
}

}  // namespace nsa
