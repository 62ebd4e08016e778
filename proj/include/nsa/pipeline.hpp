#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nsa/config.hpp"
#include "nsa/errors.hpp"
#include "nsa/image.hpp"
#include "nsa/labeler.hpp"
#include "nsa/metrics.hpp"
#include "nsa/png_io.hpp"
#include "nsa/poisson.hpp"
#include "nsa/rng.hpp"
#include "nsa/sampler.hpp"

namespace nsa::pipeline {

enum class PreprocessMode { object, texture, cxr };

// Resize / rotate / crop recipe applied to every input image before patch
// blending. Object and chest X-ray images go 256 -> rotate -> 230 center crop
// -> 224 random crop; textures take random 256 crops of 264 images.
struct PreprocessSpec {
    int resize_to = 256;
    double rotate_max = 0.0;  // degrees
    int center_crop = 256;
    int random_crop = 256;
    PreprocessMode mode = PreprocessMode::object;

    static PreprocessSpec object_mode(double rotate_max_deg = 0.0) {
        return {256, rotate_max_deg, 230, 224, PreprocessMode::object};
    }
    static PreprocessSpec texture_mode() { return {264, 0.0, 264, 256, PreprocessMode::texture}; }
    static PreprocessSpec cxr_mode() { return {256, 3.0, 230, 224, PreprocessMode::cxr}; }
    static PreprocessSpec plain(int size = 256) {
        return {size, 0.0, size, size, PreprocessMode::object};
    }

    void validate() const {
        if (resize_to < 1 || center_crop < 1 || random_crop < 1 || rotate_max < 0.0)
            throw std::invalid_argument("preprocess: bad parameters");
        if (!(random_crop <= center_crop && center_crop <= resize_to))
            throw std::invalid_argument("preprocess: require random_crop <= center_crop <= resize_to");
        if (mode == PreprocessMode::texture && (resize_to != 264 || random_crop != 256))
            throw std::invalid_argument("preprocess: texture mode uses resize 264 / random crop 256");
    }
};

namespace detail {

struct PreprocessDraw {
    double angle = 0.0;  // degrees
    double ux = 0.0;     // random-crop offsets in [0, 1)
    double uy = 0.0;
};

inline PreprocessDraw draw_preprocess(const PreprocessSpec& spec, RngStream& rng) {
    PreprocessDraw d;
    d.angle = rng.uniform(-spec.rotate_max, spec.rotate_max);
    d.ux = rng.next_double();
    d.uy = rng.next_double();
    return d;
}

inline ImagePlane apply_preprocess(const ImagePlane& image, const PreprocessSpec& spec,
                                   const PreprocessDraw& draw) {
    spec.validate();
    ImagePlane out = resize_bilinear(image, spec.resize_to, spec.resize_to);
    if (spec.rotate_max > 0.0) out = rotate(out, draw.angle);
    if (spec.center_crop < spec.resize_to) {
        const int off = (spec.resize_to - spec.center_crop) / 2;
        out = crop(out, {off, off, spec.center_crop, spec.center_crop});
    }
    if (spec.random_crop < spec.center_crop) {
        const int span = spec.center_crop - spec.random_crop + 1;
        const int ox = std::min(span - 1, static_cast<int>(draw.ux * span));
        const int oy = std::min(span - 1, static_cast<int>(draw.uy * span));
        out = crop(out, {ox, oy, spec.random_crop, spec.random_crop});
    }
    return out;
}

}  // namespace detail

// Resize, rotate by a uniform angle, center crop, then uniform random crop.
inline ImagePlane preprocess(const ImagePlane& image, const PreprocessSpec& spec,
                             RngStream& rng) {
    return detail::apply_preprocess(image, spec, detail::draw_preprocess(spec, rng));
}

enum class TaskMode { nsa_binary, nsa_continuous, nsa_logistic, cutpaste, fpi, pii };

inline const char* task_mode_name(TaskMode mode) {
    switch (mode) {
        case TaskMode::nsa_binary: return "nsa-binary";
        case TaskMode::nsa_continuous: return "nsa-continuous";
        case TaskMode::nsa_logistic: return "nsa-logistic";
        case TaskMode::cutpaste: return "cutpaste";
        case TaskMode::fpi: return "fpi";
        case TaskMode::pii: return "pii";
    }
    return "?";
}

inline std::optional<TaskMode> parse_task_mode(const std::string& name) {
    if (name == "nsa-binary") return TaskMode::nsa_binary;
    if (name == "nsa-continuous") return TaskMode::nsa_continuous;
    if (name == "nsa-logistic") return TaskMode::nsa_logistic;
    if (name == "cutpaste") return TaskMode::cutpaste;
    if (name == "fpi") return TaskMode::fpi;
    if (name == "pii") return TaskMode::pii;
    return std::nullopt;
}

inline bool is_nsa_mode(TaskMode mode) {
    return mode == TaskMode::nsa_binary || mode == TaskMode::nsa_continuous ||
           mode == TaskMode::nsa_logistic;
}

struct DatasetSpec {
    std::string input_dir;
    sampler::ClassConfig config;
    PreprocessSpec preprocessing = PreprocessSpec::plain();
    TaskMode mode = TaskMode::nsa_logistic;
    int count = 1;
    std::uint64_t base_seed = 0;
    std::string output_dir;
    int workers = 1;
    int filter_window = labeler::kDefaultFilterWindow;

    void validate() const {
        if (count < 1) throw std::invalid_argument("DatasetSpec: count must be >= 1");
        if (workers < 1) throw std::invalid_argument("DatasetSpec: workers must be >= 1");
        if (input_dir.empty() || output_dir.empty())
            throw std::invalid_argument("DatasetSpec: input and output dirs are required");
        config.validate();
        preprocessing.validate();
    }
};

// One generated sample before any file is written.
struct GeneratedSample {
    ImagePlane image;
    std::vector<std::pair<std::string, labeler::LabelMap>> labels;  // (name, map)
    std::vector<sampler::PatchPlacement> placements;
    std::vector<double> alphas;
    int source_index = 0;
    int dest_index = 0;
};

namespace detail {

// Placement list for one sample under the configured selection mode and task.
inline std::vector<sampler::PatchPlacement> draw_placements(const ImagePlane& img_s,
                                                            const ImagePlane& img_d,
                                                            const sampler::ClassConfig& cfg,
                                                            TaskMode mode, RngStream& rng) {
    using sampler::SelectionMode;
    const bool needs_same_location = mode == TaskMode::fpi || mode == TaskMode::pii;
    if (cfg.selection_mode == SelectionMode::cutpaste_style && !needs_same_location) {
        // single patch, uniform shapes, no constraints, no resize
        auto placement = sampler::sample_cutpaste_style(img_d, rng);
        if (is_nsa_mode(mode)) {
            // Poisson blending needs a boundary ring inside the image
            placement.dst_rect =
                sampler::detail::snap_with_margin(placement.dst_rect, img_d.width(),
                                                  img_d.height(), 1);
        }
        return {placement};
    }
    if (cfg.selection_mode == SelectionMode::fpi_style || needs_same_location) {
        std::optional<BinaryMask> mask_s, mask_d;
        if (cfg.constraints_enabled()) {
            mask_s = object_mask(img_s, cfg.background->background_b, cfg.background->t_brightness);
            mask_d = object_mask(img_d, cfg.background->background_b, cfg.background->t_brightness);
        }
        std::vector<sampler::PatchPlacement> placements;
        placements.push_back(sampler::sample_fpi_style(img_s, mask_s ? &*mask_s : nullptr, img_d,
                                                       mask_d ? &*mask_d : nullptr, cfg, rng));
        for (int i = 0; i < cfg.n_max - 1; ++i) {
            if (!rng.coin()) continue;
            try {
                placements.push_back(sampler::sample_fpi_style(img_s, mask_s ? &*mask_s : nullptr,
                                                               img_d, mask_d ? &*mask_d : nullptr,
                                                               cfg, rng));
            } catch (const PlacementError&) {
            }
        }
        return placements;
    }
    if (mode == TaskMode::cutpaste) {
        // copy-paste never resizes: collapse the scale bounds
        sampler::ClassConfig no_resize = cfg;
        no_resize.s_min = 1.0;
        no_resize.s_max = 1.0;
        return sampler::sample_placements(img_s, img_d, no_resize, rng);
    }
    return sampler::sample_placements(img_s, img_d, cfg, rng);
}

}  // namespace detail

// Build one training sample from two preprocessed images. All randomness
// comes from the supplied stream.
inline GeneratedSample generate_sample(const ImagePlane& img_s, const ImagePlane& img_d,
                                       const sampler::ClassConfig& cfg, TaskMode mode,
                                       RngStream& rng,
                                       int filter_window = labeler::kDefaultFilterWindow) {
    GeneratedSample out;
    out.placements = detail::draw_placements(img_s, img_d, cfg, mode, rng);

    switch (mode) {
        case TaskMode::nsa_binary:
        case TaskMode::nsa_continuous:
        case TaskMode::nsa_logistic: {
            out.image = labeler::blend_nsa(img_s, img_d, out.placements, cfg.gradient_mode);
            out.labels.emplace_back("binary", labeler::label_binary(out.image, img_d, filter_window));
            out.labels.emplace_back("continuous",
                                    labeler::label_continuous(out.image, img_d, filter_window));
            out.labels.emplace_back("logistic",
                                    labeler::label_logistic(out.image, img_d, cfg.logistic_y0,
                                                            cfg.logistic_k, filter_window));
            break;
        }
        case TaskMode::cutpaste: {
            ImagePlane image = img_d;
            labeler::LabelMap label(img_d.width(), img_d.height(), labeler::LabelKind::binary);
            for (const auto& p : out.placements) {
                auto [next, lbl] = labeler::blend_cutpaste(img_s, image, p);
                image = std::move(next);
                for (std::size_t i = 0; i < label.values.size(); ++i)
                    label.values[i] = std::max(label.values[i], lbl.values[i]);
            }
            out.image = std::move(image);
            out.labels.emplace_back("binary", std::move(label));
            break;
        }
        case TaskMode::fpi:
        case TaskMode::pii: {
            ImagePlane image = img_d;
            labeler::LabelMap label(img_d.width(), img_d.height(),
                                    labeler::LabelKind::interpolation);
            for (const auto& p : out.placements) {
                const double alpha = rng.uniform(0.05, 0.95);
                out.alphas.push_back(alpha);
                auto [next, lbl] = mode == TaskMode::fpi
                                       ? labeler::blend_fpi(img_s, image, p, alpha)
                                       : labeler::blend_pii(img_s, image, p, alpha);
                image = std::move(next);
                for (std::size_t i = 0; i < label.values.size(); ++i)
                    if (lbl.values[i] > 0.0) label.values[i] = lbl.values[i];
            }
            out.image = std::move(image);
            out.labels.emplace_back("interp", std::move(label));
            break;
        }
    }
    return out;
}

// 16-bit label encoding: bounded kinds scale [0,1] to the full range;
// continuous labels store intensity * 256, saturating.
inline std::vector<std::uint16_t> encode_label(const labeler::LabelMap& label) {
    std::vector<std::uint16_t> out(label.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = label.values[i];
        double scaled = label.kind == labeler::LabelKind::continuous ? v * 256.0 : v * 65535.0;
        scaled = std::clamp(scaled, 0.0, 65535.0);
        out[i] = static_cast<std::uint16_t>(std::lround(scaled));
    }
    return out;
}

inline labeler::LabelMap decode_label(const std::vector<std::uint16_t>& values, int width,
                                      int height, labeler::LabelKind kind) {
    labeler::LabelMap label(width, height, kind);
    const double scale = kind == labeler::LabelKind::continuous ? 1.0 / 256.0 : 1.0 / 65535.0;
    for (std::size_t i = 0; i < values.size(); ++i) label.values[i] = values[i] * scale;
    return label;
}

inline std::vector<std::string> list_images(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError(dir + " is not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == ".png") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw DataError("no .png images in " + dir);
    return paths;
}

struct SynthesisResult {
    int emitted = 0;
    int skipped = 0;
    std::string manifest_path;
};

namespace detail {

inline nlohmann::json rect_json(const Rect& r) {
    return {{"cx", r.center_x}, {"cy", r.center_y}, {"w", r.width_frac}, {"h", r.height_frac}};
}

inline nlohmann::json placement_json(const sampler::PatchPlacement& p) {
    nlohmann::json j{{"src", rect_json(p.src_rect)},
                     {"dst", rect_json(p.dst_rect)},
                     {"scale", p.scale},
                     {"source_tries", p.source_tries},
                     {"dest_tries", p.dest_tries}};
    if (p.shape_mask) j["shape_mask"] = true;
    return j;
}

}  // namespace detail

// Generate `spec.count` samples. Sample i draws everything from a stream
// derived from (base_seed, i), so output bytes are independent of worker
// count and scheduling. A sample whose placement fails is retried with fresh
// derived streams up to 5 times, then recorded as skipped.
inline SynthesisResult synthesize(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    spec.validate();

    const auto paths = list_images(spec.input_dir);
    const bool cross_image = spec.mode != TaskMode::cutpaste;
    if (cross_image && paths.size() < 2)
        throw DataError("mode " + std::string(task_mode_name(spec.mode)) +
                        " needs at least 2 input images");

    std::vector<ImagePlane> images;
    images.reserve(paths.size());
    for (const auto& p : paths) images.push_back(pngio::read_image(p));
    for (const auto& img : images)
        if (img.channels() != images.front().channels())
            throw DataError("input images mix grayscale and RGB");

    fs::create_directories(spec.output_dir);

    constexpr int kSampleRetries = 5;
    std::vector<nlohmann::json> records(static_cast<std::size_t>(spec.count));
    std::atomic<int> next_index{0};
    std::atomic<int> skipped{0};
    std::vector<std::string> worker_errors(static_cast<std::size_t>(spec.workers));

    auto run_sample = [&](int index) {
        const std::uint64_t sample_seed = RngStream::derive(spec.base_seed, static_cast<std::uint64_t>(index)).seed();
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%06d", index);

        std::string failure;
        for (int attempt = 0; attempt < kSampleRetries; ++attempt) {
            RngStream rng = RngStream::derive(sample_seed, static_cast<std::uint64_t>(attempt));
            try {
                const int n = static_cast<int>(images.size());
                int src_idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
                int dst_idx = src_idx;
                if (cross_image)
                    while (dst_idx == src_idx)
                        dst_idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));

                const auto draw = detail::draw_preprocess(spec.preprocessing, rng);
                const ImagePlane img_s =
                    detail::apply_preprocess(images[static_cast<std::size_t>(src_idx)],
                                             spec.preprocessing, draw);
                const ImagePlane img_d =
                    detail::apply_preprocess(images[static_cast<std::size_t>(dst_idx)],
                                             spec.preprocessing, draw);

                GeneratedSample sample = generate_sample(img_s, img_d, spec.config, spec.mode,
                                                         rng, spec.filter_window);
                sample.source_index = src_idx;
                sample.dest_index = dst_idx;

                const std::string image_file = std::string(stem) + "_image.png";
                pngio::write_png8(sample.image, (fs::path(spec.output_dir) / image_file).string());

                nlohmann::json labels_json;
                for (const auto& [name, label] : sample.labels) {
                    const std::string label_file = std::string(stem) + "_label_" + name + ".png";
                    pngio::write_png16(encode_label(label), label.width, label.height,
                                       (fs::path(spec.output_dir) / label_file).string());
                    labels_json[name] = label_file;
                }

                nlohmann::json rec{
                    {"id", index},
                    {"status", "ok"},
                    {"mode", task_mode_name(spec.mode)},
                    {"seed", sample_seed},
                    {"attempt", attempt},
                    {"source",
                     fs::path(paths[static_cast<std::size_t>(src_idx)]).filename().string()},
                    {"dest",
                     fs::path(paths[static_cast<std::size_t>(dst_idx)]).filename().string()},
                    {"image", image_file},
                    {"labels", labels_json}};
                nlohmann::json placements = nlohmann::json::array();
                for (const auto& p : sample.placements)
                    placements.push_back(detail::placement_json(p));
                rec["placements"] = placements;
                if (!sample.alphas.empty()) rec["alphas"] = sample.alphas;
                records[static_cast<std::size_t>(index)] = std::move(rec);
                return;
            } catch (const PlacementError& e) {
                failure = e.what();
            }
        }
        skipped.fetch_add(1);
        records[static_cast<std::size_t>(index)] =
            nlohmann::json{{"id", index},
                           {"status", "skipped"},
                           {"mode", task_mode_name(spec.mode)},
                           {"seed", sample_seed},
                           {"attempts", kSampleRetries},
                           {"reason", failure}};
    };

    auto worker = [&](int worker_id) {
        try {
            for (;;) {
                const int index = next_index.fetch_add(1);
                if (index >= spec.count) return;
                run_sample(index);
            }
        } catch (const std::exception& e) {
            worker_errors[static_cast<std::size_t>(worker_id)] = e.what();
        }
    };

    if (spec.workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(spec.workers));
        for (int w = 0; w < spec.workers; ++w) threads.emplace_back(worker, w);
        for (auto& t : threads) t.join();
    }
    for (const auto& err : worker_errors)
        if (!err.empty()) throw DataError(err);

    SynthesisResult result;
    result.manifest_path = (fs::path(spec.output_dir) / "manifest.jsonl").string();
    std::ofstream manifest(result.manifest_path, std::ios::trunc);
    if (!manifest) throw DataError("cannot write " + result.manifest_path);
    for (const auto& rec : records) manifest << rec.dump() << "\n";
    result.skipped = skipped.load();
    result.emitted = spec.count - result.skipped;
    return result;
}

struct EvalOptions {
    double fpr_limit = 0.3;
    int connectivity = 8;
    bool resample_256 = false;
};

namespace detail {

inline std::map<std::string, std::string> stem_map(const std::string& dir) {
    std::map<std::string, std::string> stems;
    for (const auto& path : list_images(dir))
        stems[std::filesystem::path(path).stem().string()] = path;
    return stems;
}

inline std::vector<double> load_prediction(const std::string& path, bool resample) {
    const auto png = pngio::read_png(path);
    if (png.channels != 1) throw DataError(path + ": prediction maps must be grayscale");
    const double scale = png.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    if (!resample) {
        std::vector<double> pred(png.samples.size());
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = png.samples[i] * scale;
        return pred;
    }
    const ImagePlane resized = resize_bilinear(to_image_plane(png), 256, 256);
    std::vector<double> pred(resized.size());
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = resized.data()[i];
    return pred;
}

inline BinaryMask load_truth(const std::string& path, bool resample) {
    const auto png = pngio::read_png(path);
    BinaryMask mask(png.width, png.height);
    const int c = png.channels;
    for (int y = 0; y < png.height; ++y)
        for (int x = 0; x < png.width; ++x) {
            std::uint32_t v = 0;
            for (int ch = 0; ch < c; ++ch)
                v += png.samples[(static_cast<std::size_t>(y) * png.width + x) * c + ch];
            mask.set(x, y, v != 0);
        }
    if (resample) mask = resize_nearest(mask, 256, 256);
    return mask;
}

inline std::vector<metrics::CurvePoint> decimate(const std::vector<metrics::CurvePoint>& points,
                                                 std::size_t max_points = 512) {
    if (points.size() <= max_points) return points;
    std::vector<metrics::CurvePoint> out;
    out.reserve(max_points + 1);
    const double step = static_cast<double>(points.size() - 1) / static_cast<double>(max_points - 1);
    for (std::size_t i = 0; i < max_points; ++i)
        out.push_back(points[static_cast<std::size_t>(std::lround(i * step))]);
    out.back() = points.back();
    return out;
}

inline nlohmann::json curve_json(const std::vector<metrics::CurvePoint>& points) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : points) arr.push_back({p.fpr, p.value});
    return arr;
}

}  // namespace detail

// Score a directory of prediction maps against ground-truth masks matched by
// file stem.
inline metrics::ScoreReport evaluate(const std::string& pred_dir, const std::string& truth_dir,
                                     const EvalOptions& options = {}) {
    const auto preds = detail::stem_map(pred_dir);
    const auto truths = detail::stem_map(truth_dir);
    for (const auto& [stem, path] : preds)
        if (!truths.count(stem)) throw DataError("prediction '" + stem + "' has no truth mask");
    for (const auto& [stem, path] : truths)
        if (!preds.count(stem)) throw DataError("truth mask '" + stem + "' has no prediction");

    std::vector<metrics::ScoredSample> samples;
    std::vector<std::pair<double, bool>> image_scores;
    for (const auto& [stem, pred_path] : preds) {
        metrics::ScoredSample s;
        s.prediction = detail::load_prediction(pred_path, options.resample_256);
        s.truth = detail::load_truth(truths.at(stem), options.resample_256);
        s.width = s.truth.width;
        s.height = s.truth.height;
        if (s.prediction.size() != static_cast<std::size_t>(s.width) * s.height)
            throw DataError("size mismatch between '" + stem + "' prediction and mask");
        image_scores.emplace_back(metrics::image_score(s.prediction), s.anomalous());
        samples.push_back(std::move(s));
    }

    metrics::ScoreReport report;
    try {
        report.image_auroc = metrics::auroc(image_scores);
        report.image_roc_points = metrics::roc_curve(image_scores);
    } catch (const MetricError& e) {
        throw MetricError(std::string("image-level: ") + e.what());
    }

    std::vector<std::pair<double, bool>> pixel_pool;
    for (const auto& s : samples)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                pixel_pool.emplace_back(s.prediction[static_cast<std::size_t>(y) * s.width + x],
                                        s.truth.at(x, y));
    try {
        report.pixel_auroc = metrics::auroc(pixel_pool);
        report.pixel_roc_points = metrics::roc_curve(pixel_pool);
    } catch (const MetricError& e) {
        throw MetricError(std::string("pixel-level: ") + e.what());
    }

    report.au_pro_03 =
        metrics::au_pro(samples, options.fpr_limit, options.connectivity, &report.pro_points);
    return report;
}

inline nlohmann::json report_json(const metrics::ScoreReport& report,
                                  const EvalOptions& options) {
    return nlohmann::json{{"image_auroc", report.image_auroc},
                          {"pixel_auroc", report.pixel_auroc},
                          {"au_pro_03", report.au_pro_03},
                          {"fpr_limit", options.fpr_limit},
                          {"connectivity", options.connectivity},
                          {"resample_256", options.resample_256},
                          {"image_roc", detail::curve_json(detail::decimate(report.image_roc_points))},
                          {"pixel_roc", detail::curve_json(detail::decimate(report.pixel_roc_points))},
                          {"pro_curve", detail::curve_json(detail::decimate(report.pro_points))}};
}

// Mean absolute jump across the destination-rect boundary: for every edge
// with one endpoint just inside the rect and the other just outside, the
// channel-mean absolute difference. CutPaste introduces hard edges here while
// Poisson blending matches the destination by construction.
inline double edge_discontinuity(const ImagePlane& image, const PixelRect& rect) {
    double sum = 0.0;
    long long count = 0;
    auto edge = [&](int ix, int iy, int ox, int oy) {
        if (ox < 0 || oy < 0 || ox >= image.width() || oy >= image.height()) return;
        double d = 0.0;
        for (int c = 0; c < image.channels(); ++c)
            d += std::abs(static_cast<double>(image.at(ix, iy, c)) - image.at(ox, oy, c));
        sum += d / image.channels();
        ++count;
    };
    for (int x = rect.x; x < rect.x + rect.w; ++x) {
        edge(x, rect.y, x, rect.y - 1);
        edge(x, rect.y + rect.h - 1, x, rect.y + rect.h);
    }
    for (int y = rect.y; y < rect.y + rect.h; ++y) {
        edge(rect.x, y, rect.x - 1, y);
        edge(rect.x + rect.w - 1, y, rect.x + rect.w, y);
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

struct DemoResult {
    ImagePlane composite;
    std::map<std::string, double> boundary_gradient;  // per task variant
    PixelRect dst_rect;
};

// Side-by-side composite of the four task variants on one image pair, sharing
// a single placement: blended image on the top row, label underneath.
inline DemoResult run_demo(const ImagePlane& raw_a, const ImagePlane& raw_b,
                           const sampler::ClassConfig& cfg, std::uint64_t seed) {
    if (raw_a.channels() != raw_b.channels())
        throw DataError("demo: images must have the same channel count");
    RngStream rng(seed);

    const int size = 256;
    const ImagePlane img_s = resize_bilinear(raw_a, size, size);
    const ImagePlane img_d = resize_bilinear(raw_b, size, size);

    // one shared placement with a comfortably visible patch
    sampler::ClassConfig demo_cfg = cfg;
    demo_cfg.n_max = 1;
    demo_cfg.w_min = std::max(cfg.w_min, 0.2);
    demo_cfg.h_min = std::max(cfg.h_min, 0.2);
    demo_cfg.w_max = std::max(demo_cfg.w_min, cfg.w_max);
    demo_cfg.h_max = std::max(demo_cfg.h_min, cfg.h_max);
    const auto placements = sampler::sample_placements(img_s, img_d, demo_cfg, rng);
    const auto& placement = placements.front();

    sampler::PatchPlacement same_loc = placement;
    same_loc.src_rect = placement.dst_rect;
    same_loc.scale = 1.0;
    const double alpha = rng.uniform(0.4, 0.8);

    auto [cut_img, cut_lbl] = labeler::blend_cutpaste(img_s, img_d, placement);
    auto [fpi_img, fpi_lbl] = labeler::blend_fpi(img_s, img_d, same_loc, alpha);
    auto [pii_img, pii_lbl] = labeler::blend_pii(img_s, img_d, same_loc, alpha);
    ImagePlane nsa_img = labeler::blend_nsa(img_s, img_d, placements, cfg.gradient_mode);
    labeler::LabelMap nsa_lbl =
        labeler::label_logistic(nsa_img, img_d, cfg.logistic_y0, cfg.logistic_k);

    const PixelRect dr = placement.dst_rect.to_pixels(size, size);
    const PixelRect sr = same_loc.dst_rect.to_pixels(size, size);

    DemoResult result;
    result.dst_rect = dr;
    result.boundary_gradient["cutpaste"] = edge_discontinuity(cut_img, dr);
    result.boundary_gradient["fpi"] = edge_discontinuity(fpi_img, sr);
    result.boundary_gradient["pii"] = edge_discontinuity(pii_img, sr);
    result.boundary_gradient["nsa"] = edge_discontinuity(nsa_img, dr);
    result.boundary_gradient["baseline"] = edge_discontinuity(img_d, dr);

    const int gutter = 4;
    const int cols = 5;
    ImagePlane composite(cols * size + (cols - 1) * gutter, 2 * size + gutter,
                         img_d.channels(), 1.0f);
    auto put_label = [&](const labeler::LabelMap& lbl, int col) {
        ImagePlane plane(size, size, img_d.channels());
        const double scale = lbl.kind == labeler::LabelKind::continuous ? 1.0 / 255.0 : 1.0;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < img_d.channels(); ++c)
                    plane.at(x, y, c) = clamp01(static_cast<float>(lbl.at(x, y) * scale));
        paste(composite, plane, col * (size + gutter), size + gutter);
    };
    paste(composite, img_d, 0, 0);
    paste(composite, cut_img, 1 * (size + gutter), 0);
    paste(composite, fpi_img, 2 * (size + gutter), 0);
    paste(composite, pii_img, 3 * (size + gutter), 0);
    paste(composite, nsa_img, 4 * (size + gutter), 0);
    put_label(cut_lbl, 1);
    put_label(fpi_lbl, 2);
    put_label(pii_lbl, 3);
    put_label(nsa_lbl, 4);

    result.composite = std::move(composite);
    return result;
}

}  // namespace nsa::pipeline
