#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "nsa/errors.hpp"
#include "nsa/image.hpp"
#include "nsa/labeler.hpp"
#include "nsa/math.hpp"

namespace nsa::metrics {

// One evaluated image: a prediction map and its ground truth. A sample is
// anomalous exactly when its mask has at least one set pixel.
struct ScoredSample {
    int width = 0;
    int height = 0;
    std::vector<double> prediction;  // row-major, one value per pixel
    BinaryMask truth;

    ScoredSample() = default;
    ScoredSample(int w, int h) : width(w), height(h),
        prediction(static_cast<std::size_t>(w) * h, 0.0), truth(w, h) {}

    bool anomalous() const { return !truth.empty(); }

    void check() const {
        if (truth.width != width || truth.height != height ||
            prediction.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("ScoredSample: prediction/mask dimension mismatch");
    }
};

struct CurvePoint {
    double fpr = 0.0;
    double value = 0.0;  // TPR for ROC curves, PRO for the PRO curve
};

struct ScoreReport {
    double image_auroc = 0.0;
    double pixel_auroc = 0.0;
    double au_pro_03 = 0.0;
    std::vector<CurvePoint> image_roc_points;
    std::vector<CurvePoint> pixel_roc_points;
    std::vector<CurvePoint> pro_points;
};

// Image-level score of a prediction map: the mean pixel score.
inline double image_score(const std::vector<double>& prediction) {
    if (prediction.empty()) throw std::invalid_argument("image_score: empty map");
    double sum = 0.0;
    for (double v : prediction) sum += v;
    return sum / static_cast<double>(prediction.size());
}

// AUROC as the Mann-Whitney statistic P(pos > neg) + 0.5 P(tie), computed by
// rank sums with average ranks over ties.
inline double auroc(const std::vector<std::pair<double, bool>>& scores) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [s, positive] : scores) (positive ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("auroc: need at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].first < scores[b].first;
    });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]].first == scores[order[i]].first) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (scores[order[k]].second) pos_rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// ROC points at every distinct score (positive means score >= threshold),
// from (0,0) to (1,1).
inline std::vector<CurvePoint> roc_curve(const std::vector<std::pair<double, bool>>& scores) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [s, positive] : scores) (positive ? n_pos : n_neg) += 1;

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].first > scores[b].first;
    });

    std::vector<CurvePoint> points;
    points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]].first == scores[order[i]].first) ++j;
        for (std::size_t k = i; k < j; ++k) (scores[order[k]].second ? tp : fp) += 1;
        points.push_back({n_neg ? static_cast<double>(fp) / n_neg : 0.0,
                          n_pos ? static_cast<double>(tp) / n_pos : 0.0});
        i = j;
    }
    return points;
}

// Pixel-level AUROC over all pixels of all samples pooled.
inline double pixel_auroc(const std::vector<ScoredSample>& samples) {
    std::vector<std::pair<double, bool>> pool;
    for (const auto& s : samples) {
        s.check();
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                pool.emplace_back(s.prediction[static_cast<std::size_t>(y) * s.width + x],
                                  s.truth.at(x, y));
    }
    return auroc(pool);
}

// Connected components of a mask. Returns per-pixel component ids (-1 for
// background) and writes the component count.
inline std::vector<int> connected_components(const BinaryMask& mask, int connectivity,
                                             int* count_out) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("connected_components: connectivity must be 4 or 8");
    const int W = mask.width, H = mask.height;
    std::vector<int> labels(static_cast<std::size_t>(W) * H, -1);
    std::vector<std::pair<int, int>> stack;
    int next = 0;
    for (int y0 = 0; y0 < H; ++y0)
        for (int x0 = 0; x0 < W; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * W + x0;
            if (!mask.at(x0, y0) || labels[i0] >= 0) continue;
            const int id = next++;
            labels[i0] = id;
            stack.push_back({x0, y0});
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (connectivity == 4 && dx != 0 && dy != 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * W + nx;
                        if (mask.at(nx, ny) && labels[ni] < 0) {
                            labels[ni] = id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
        }
    if (count_out) *count_out = next;
    return labels;
}

namespace detail {

// Area under a curve of (fpr, value) points, integrated by trapezoid up to
// fpr_limit with linear interpolation at the limit, normalized by the limit.
inline double integrate_to_limit(const std::vector<CurvePoint>& points, double fpr_limit) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1];
        const auto& b = points[i];
        if (b.fpr <= fpr_limit) {
            area += 0.5 * (a.value + b.value) * (b.fpr - a.fpr);
            if (b.fpr == fpr_limit) break;
        } else {
            if (a.fpr < fpr_limit) {
                const double t = (fpr_limit - a.fpr) / (b.fpr - a.fpr);
                const double v = a.value + t * (b.value - a.value);
                area += 0.5 * (a.value + v) * (fpr_limit - a.fpr);
            }
            break;
        }
    }
    return area / fpr_limit;
}

}  // namespace detail

// Per-region-overlap curve: PRO(t) is the mean over ground-truth components of
// their covered fraction when thresholding predictions at t; FPR(t) is pooled
// over all normal pixels. Points at every distinct prediction value.
inline std::vector<CurvePoint> pro_curve(const std::vector<ScoredSample>& samples,
                                         int connectivity = 8) {
    struct Pixel {
        double score;
        int component;  // global id, -1 for normal pixels
    };
    std::vector<Pixel> pixels;
    std::vector<long long> comp_size;
    long long n_neg = 0;

    for (const auto& s : samples) {
        s.check();
        int count = 0;
        const auto labels = connected_components(s.truth, connectivity, &count);
        const int base = static_cast<int>(comp_size.size());
        comp_size.resize(comp_size.size() + count, 0);
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * s.width + x;
                const int comp = labels[i] >= 0 ? base + labels[i] : -1;
                if (comp >= 0)
                    comp_size[static_cast<std::size_t>(comp)] += 1;
                else
                    ++n_neg;
                pixels.push_back({s.prediction[i], comp});
            }
    }
    if (comp_size.empty()) throw MetricError("au_pro: no ground-truth components");
    if (n_neg == 0) throw MetricError("au_pro: no normal pixels");

    std::sort(pixels.begin(), pixels.end(),
              [](const Pixel& a, const Pixel& b) { return a.score > b.score; });

    const double M = static_cast<double>(comp_size.size());
    std::vector<double> covered(comp_size.size(), 0.0);
    std::vector<CurvePoint> points;
    points.push_back({0.0, 0.0});

    double pro_sum = 0.0;  // sum over components of covered fraction
    long long fp = 0;
    std::size_t i = 0;
    while (i < pixels.size()) {
        std::size_t j = i;
        while (j < pixels.size() && pixels[j].score == pixels[i].score) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (pixels[k].component >= 0) {
                const auto c = static_cast<std::size_t>(pixels[k].component);
                covered[c] += 1.0;
                pro_sum += 1.0 / static_cast<double>(comp_size[c]);
            } else {
                ++fp;
            }
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg), pro_sum / M});
        i = j;
    }
    return points;
}

inline double au_pro(const std::vector<ScoredSample>& samples, double fpr_limit = 0.3,
                     int connectivity = 8, std::vector<CurvePoint>* curve_out = nullptr) {
    if (!(fpr_limit > 0.0 && fpr_limit <= 1.0))
        throw std::invalid_argument("au_pro: fpr_limit must be in (0, 1]");
    auto points = pro_curve(samples, connectivity);
    const double area = detail::integrate_to_limit(points, fpr_limit);
    if (curve_out) *curve_out = std::move(points);
    return area;
}

inline constexpr double kBceEpsilon = 1e-7;

// Mean binary cross-entropy against a bounded label map; predictions are
// clipped to [eps, 1 - eps].
inline double bce_loss(const std::vector<double>& prediction, const labeler::LabelMap& label) {
    if (prediction.size() != label.values.size())
        throw std::invalid_argument("bce_loss: dimension mismatch");
    if (label.kind == labeler::LabelKind::continuous)
        throw std::invalid_argument("bce_loss: continuous labels use mse_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double p = std::clamp(prediction[i], kBceEpsilon, 1.0 - kBceEpsilon);
        const double y = label.values[i];
        sum -= y * nsa::detail::portable_log(p) + (1.0 - y) * nsa::detail::portable_log(1.0 - p);
    }
    return sum / static_cast<double>(prediction.size());
}

inline double mse_loss(const std::vector<double>& prediction, const labeler::LabelMap& label) {
    if (prediction.size() != label.values.size())
        throw std::invalid_argument("mse_loss: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - label.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(prediction.size());
}

}  // namespace nsa::metrics
