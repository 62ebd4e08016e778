#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nsa/image.hpp"

namespace nsa::poisson {

enum class GradientMode { source, mixed };

struct SolveStats {
    int iterations = 0;
    double final_residual = 0.0;  // ||b - A f||_2 / max(1, ||b||_2), pre-clamp
    bool converged = false;
};

// Guidance field over a clone region: for every region pixel p and each of
// its 4 neighbors q, the target difference v_pq per channel. Stored as four
// direction planes (+x, -x, +y, -y); v_pq = -v_qp holds by construction.
class GuidanceField {
public:
    GuidanceField(BinaryMask region, int channels)
        : region_(std::move(region)), channels_(channels) {
        const std::size_t plane = static_cast<std::size_t>(region_.width) * region_.height;
        planes_.resize(static_cast<std::size_t>(channels_));
        for (auto& dirs : planes_)
            for (auto& p : dirs) p.assign(plane, 0.0);
    }

    const BinaryMask& region() const { return region_; }
    int channels() const { return channels_; }
    int width() const { return region_.width; }
    int height() const { return region_.height; }

    // dir: 0 = +x, 1 = -x, 2 = +y, 3 = -y
    double edge(int c, int dir, int x, int y) const {
        return planes_[c][dir][static_cast<std::size_t>(y) * region_.width + x];
    }
    void set_edge(int c, int dir, int x, int y, double v) {
        planes_[c][dir][static_cast<std::size_t>(y) * region_.width + x] = v;
    }

private:
    BinaryMask region_;
    int channels_;
    std::vector<std::array<std::vector<double>, 4>> planes_;
};

namespace detail {

constexpr int DX[4] = {1, -1, 0, 0};
constexpr int DY[4] = {0, 0, 1, -1};

// Region pixels in row-major order with an index lookup; fixes the unknown
// ordering for the linear system.
struct RegionIndex {
    int width = 0;
    int height = 0;
    std::vector<int> index;                    // -1 for non-region pixels
    std::vector<std::pair<int, int>> pixels;   // k -> (x, y)

    std::size_t n() const { return pixels.size(); }
};

inline RegionIndex build_region_index(const BinaryMask& region) {
    RegionIndex ri;
    ri.width = region.width;
    ri.height = region.height;
    ri.index.assign(static_cast<std::size_t>(region.width) * region.height, -1);
    for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x)
            if (region.at(x, y)) {
                ri.index[static_cast<std::size_t>(y) * region.width + x] =
                    static_cast<int>(ri.pixels.size());
                ri.pixels.emplace_back(x, y);
            }
    return ri;
}

inline bool region_touches_border(const BinaryMask& region) {
    for (int x = 0; x < region.width; ++x)
        if (region.at(x, 0) || region.at(x, region.height - 1)) return true;
    for (int y = 0; y < region.height; ++y)
        if (region.at(0, y) || region.at(region.width - 1, y)) return true;
    return false;
}

// Right-hand side of the 5-point system for one channel:
//   |N_p| f_p - sum_{q in N_p ∩ Ω} f_q = sum_{q in N_p ∩ ∂Ω} f*_q + sum_{q in N_p} v_pq
inline std::vector<double> assemble_rhs(const RegionIndex& ri, const ImagePlane& destination,
                                        const GuidanceField& field, int channel) {
    std::vector<double> b(ri.n(), 0.0);
    for (std::size_t k = 0; k < ri.n(); ++k) {
        const auto [x, y] = ri.pixels[k];
        double v = 0.0;
        for (int d = 0; d < 4; ++d) {
            const int qx = x + DX[d], qy = y + DY[d];
            v += field.edge(channel, d, x, y);
            if (ri.index[static_cast<std::size_t>(qy) * ri.width + qx] < 0)
                v += destination.at(qx, qy, channel);
        }
        b[k] = v;
    }
    return b;
}

// 5-point Laplacian apply restricted to the region (diagonal 4, off-diagonal
// -1 for in-region neighbors).
inline void apply_laplacian(const RegionIndex& ri, const std::vector<double>& x,
                            std::vector<double>& out) {
    for (std::size_t k = 0; k < ri.n(); ++k) {
        const auto [px, py] = ri.pixels[k];
        double acc = 4.0 * x[k];
        for (int d = 0; d < 4; ++d) {
            const int j = ri.index[static_cast<std::size_t>(py + DY[d]) * ri.width + (px + DX[d])];
            if (j >= 0) acc -= x[static_cast<std::size_t>(j)];
        }
        out[k] = acc;
    }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline int default_max_iter(std::size_t n) {
    return static_cast<int>(10.0 * std::sqrt(static_cast<double>(n))) + 1000;
}

// Jacobi-preconditioned conjugate gradient. The system is symmetric positive
// definite; the diagonal is the constant 4 for interior regions.
inline std::vector<double> solve_channel_cg(const RegionIndex& ri, const std::vector<double>& b,
                                            std::vector<double> x, double tolerance, int max_iter,
                                            SolveStats& stats) {
    const std::size_t n = ri.n();
    if (max_iter <= 0) max_iter = default_max_iter(n);
    const double bnorm = std::max(1.0, std::sqrt(dot(b, b)));
    const double bound = tolerance * bnorm;

    std::vector<double> r(n), z(n), p(n), ap(n);
    apply_laplacian(ri, x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

    int it = 0;
    double rnorm = std::sqrt(dot(r, r));
    if (rnorm > bound) {
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / 4.0;
        p = z;
        double rz = dot(r, z);
        for (it = 1; it <= max_iter; ++it) {
            apply_laplacian(ri, p, ap);
            const double alpha = rz / dot(p, ap);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rnorm = std::sqrt(dot(r, r));
            if (rnorm <= bound) break;
            for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / 4.0;
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        if (it > max_iter) it = max_iter;
    }

    // true residual for the reported stats
    apply_laplacian(ri, x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    rnorm = std::sqrt(dot(r, r));
    stats.iterations = std::max(stats.iterations, it);
    stats.final_residual = std::max(stats.final_residual, rnorm / bnorm);
    if (rnorm > bound) stats.converged = false;
    return x;
}

}  // namespace detail

// v = grad g: v_pq = g_p - g_q per channel for each 4-neighbor edge.
inline GuidanceField guidance_source(const ImagePlane& source_patch, const BinaryMask& region) {
    if (source_patch.width() != region.width || source_patch.height() != region.height)
        throw std::invalid_argument("guidance_source: dimension mismatch");
    GuidanceField field(region, source_patch.channels());
    for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x) {
            if (!region.at(x, y)) continue;
            for (int d = 0; d < 4; ++d) {
                const int qx = x + detail::DX[d], qy = y + detail::DY[d];
                if (qx < 0 || qy < 0 || qx >= region.width || qy >= region.height) continue;
                for (int c = 0; c < source_patch.channels(); ++c)
                    field.set_edge(c, d, x, y,
                                   static_cast<double>(source_patch.at(x, y, c)) -
                                       source_patch.at(qx, qy, c));
            }
        }
    return field;
}

// Mixed guidance: per edge and channel, keep the destination difference when
// its magnitude strictly exceeds the source difference, else the source one.
inline GuidanceField guidance_mixed(const ImagePlane& source_patch, const ImagePlane& destination,
                                    const BinaryMask& region) {
    if (source_patch.width() != region.width || source_patch.height() != region.height ||
        !source_patch.same_shape(destination))
        throw std::invalid_argument("guidance_mixed: dimension mismatch");
    GuidanceField field(region, source_patch.channels());
    for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x) {
            if (!region.at(x, y)) continue;
            for (int d = 0; d < 4; ++d) {
                const int qx = x + detail::DX[d], qy = y + detail::DY[d];
                if (qx < 0 || qy < 0 || qx >= region.width || qy >= region.height) continue;
                for (int c = 0; c < source_patch.channels(); ++c) {
                    const double dg = static_cast<double>(source_patch.at(x, y, c)) -
                                      source_patch.at(qx, qy, c);
                    const double df = static_cast<double>(destination.at(x, y, c)) -
                                      destination.at(qx, qy, c);
                    field.set_edge(c, d, x, y, std::abs(df) > std::abs(dg) ? df : dg);
                }
            }
        }
    return field;
}

// Pre-clamp solve: per-channel solution values at the region pixels in
// row-major region order. Exposed for oracle comparisons and superposition
// tests; solve_poisson wraps it.
inline std::pair<std::vector<std::vector<double>>, SolveStats> solve_poisson_raw(
    const ImagePlane& destination, const GuidanceField& field, double tolerance, int max_iter) {
    if (field.width() != destination.width() || field.height() != destination.height() ||
        field.channels() != destination.channels())
        throw std::invalid_argument("solve_poisson: field/destination mismatch");
    if (tolerance <= 0.0) throw std::invalid_argument("solve_poisson: tolerance must be > 0");
    if (detail::region_touches_border(field.region()))
        throw std::invalid_argument("solve_poisson: region touches the image border");

    const auto ri = detail::build_region_index(field.region());
    SolveStats stats;
    stats.converged = true;
    std::vector<std::vector<double>> solution(static_cast<std::size_t>(destination.channels()));
    for (int c = 0; c < destination.channels(); ++c) {
        const auto b = detail::assemble_rhs(ri, destination, field, c);
        std::vector<double> x0(ri.n());
        for (std::size_t k = 0; k < ri.n(); ++k) {
            const auto [px, py] = ri.pixels[k];
            x0[k] = destination.at(px, py, c);
        }
        solution[static_cast<std::size_t>(c)] =
            detail::solve_channel_cg(ri, b, std::move(x0), tolerance, max_iter, stats);
    }
    return {std::move(solution), stats};
}

// Dirichlet solve of the discrete Poisson equation: pixels outside the region
// are returned bit-identical to the destination; region pixels carry the
// clamped solution.
inline std::pair<ImagePlane, SolveStats> solve_poisson(const ImagePlane& destination,
                                                       const GuidanceField& field,
                                                       double tolerance = 1e-5,
                                                       int max_iter = 0) {
    auto [solution, stats] = solve_poisson_raw(destination, field, tolerance, max_iter);
    ImagePlane out = destination;
    const auto ri = detail::build_region_index(field.region());
    for (int c = 0; c < destination.channels(); ++c)
        for (std::size_t k = 0; k < ri.n(); ++k) {
            const auto [px, py] = ri.pixels[k];
            out.at(px, py, c) = clamp01(static_cast<float>(solution[static_cast<std::size_t>(c)][k]));
        }
    return {std::move(out), stats};
}

// Extracts src_rect, resizes it to dst_rect's pixel size, restricts the clone
// region to the shape mask when present, builds the guidance field and solves.
// The clone region is the destination rectangle minus its 1-pixel boundary
// ring, which carries the Dirichlet data.
inline ImagePlane seamless_clone(const ImagePlane& source, const ImagePlane& destination,
                                 const Rect& src_rect, const Rect& dst_rect, GradientMode mode,
                                 const BinaryMask* shape_mask = nullptr,
                                 double tolerance = 1e-5, int max_iter = 0,
                                 SolveStats* stats_out = nullptr) {
    if (source.channels() != destination.channels())
        throw std::invalid_argument("seamless_clone: channel mismatch");
    const PixelRect sr = src_rect.to_pixels(source.width(), source.height());
    const PixelRect dr = dst_rect.to_pixels(destination.width(), destination.height());
    if (sr.w <= 2 || sr.h <= 2 || dr.w <= 2 || dr.h <= 2)
        throw std::invalid_argument("seamless_clone: degenerate rectangle");
    if (dr.x < 1 || dr.y < 1 || dr.x + dr.w > destination.width() - 1 ||
        dr.y + dr.h > destination.height() - 1)
        throw std::invalid_argument("seamless_clone: destination rect needs a 1-pixel margin");
    if (shape_mask && (shape_mask->width != dr.w || shape_mask->height != dr.h))
        throw std::invalid_argument("seamless_clone: shape mask must match the destination rect");

    const ImagePlane patch = resize_bilinear(crop(source, sr), dr.w, dr.h);

    BinaryMask region(destination.width(), destination.height());
    for (int y = 1; y < dr.h - 1; ++y)
        for (int x = 1; x < dr.w - 1; ++x)
            if (!shape_mask || shape_mask->at(x, y))
                region.set(dr.x + x, dr.y + y, true);
    if (region.empty()) {
        if (stats_out) *stats_out = SolveStats{0, 0.0, true};
        return destination;
    }

    ImagePlane laid = destination;
    paste(laid, patch, dr.x, dr.y);

    const GuidanceField field = mode == GradientMode::source
                                    ? guidance_source(laid, region)
                                    : guidance_mixed(laid, destination, region);
    auto [out, stats] = solve_poisson(destination, field, tolerance, max_iter);
    if (stats_out) *stats_out = stats;
    return std::move(out);
}

}  // namespace nsa::poisson
