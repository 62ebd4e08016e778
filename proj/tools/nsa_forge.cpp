// nsa-forge: generate Natural-Synthetic-Anomaly training samples from folders
// of normal images and score anomaly-map predictions.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsa/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPlacement = 3;

int default_workers() {
    if (const char* env = std::getenv("NSA_FORGE_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

nsa::pipeline::PreprocessSpec preprocess_from_name(const std::string& name, int size) {
    using nsa::pipeline::PreprocessSpec;
    if (name == "none") return PreprocessSpec::plain(size);
    if (name == "object") return PreprocessSpec::object_mode(0.0);
    if (name == "object-rot") return PreprocessSpec::object_mode(5.0);
    if (name == "texture") return PreprocessSpec::texture_mode();
    if (name == "cxr") return PreprocessSpec::cxr_mode();
    throw nsa::DataError("unknown preprocess recipe '" + name + "'");
}

void apply_ablation(nsa::sampler::ClassConfig& cfg, const std::string& ablation) {
    if (ablation.empty()) return;
    if (ablation == "A") {
        cfg.background.reset();
    } else if (ablation == "B") {
        cfg.n_max = 1;
    } else if (ablation == "C") {
        cfg.selection_mode = nsa::sampler::SelectionMode::cutpaste_style;
    } else if (ablation == "D") {
        cfg.shape_mode = nsa::sampler::ShapeMode::ellipse_union;
    } else {
        throw nsa::DataError("unknown ablation '" + ablation + "' (expected A, B, C or D)");
    }
}

struct SynthesizeArgs {
    std::string config_path;
    std::string input_dir;
    std::string output_dir;
    int count = 16;
    std::uint64_t seed = 0;
    std::string mode = "nsa-logistic";
    int workers = default_workers();
    std::string ablation;
    std::string preprocess = "none";
    int size = 256;
    int filter_window = 5;
};

int run_synthesize(const SynthesizeArgs& args) {
    nsa::pipeline::DatasetSpec spec;
    spec.config = nsa::pipeline::load_class_config(args.config_path);
    apply_ablation(spec.config, args.ablation);
    spec.input_dir = args.input_dir;
    spec.output_dir = args.output_dir;
    spec.count = args.count;
    spec.base_seed = args.seed;
    spec.workers = args.workers;
    spec.filter_window = args.filter_window;
    spec.preprocessing = preprocess_from_name(args.preprocess, args.size);

    const auto mode = nsa::pipeline::parse_task_mode(args.mode);
    if (!mode) throw nsa::DataError("unknown mode '" + args.mode + "'");
    spec.mode = *mode;

    const auto result = nsa::pipeline::synthesize(spec);
    std::cout << "emitted " << result.emitted << " sample(s), skipped " << result.skipped
              << "; manifest: " << result.manifest_path << "\n";
    return result.skipped > 0 ? kExitPlacement : kExitOk;
}

struct BlendArgs {
    std::string config_path;
    std::string source_path;
    std::string dest_path;
    std::string output_prefix;
    std::string mode = "nsa-logistic";
    std::uint64_t seed = 0;
    std::string ablation;
    int size = 256;
    int filter_window = 5;
};

int run_blend(const BlendArgs& args) {
    auto cfg = nsa::pipeline::load_class_config(args.config_path);
    apply_ablation(cfg, args.ablation);
    const auto mode = nsa::pipeline::parse_task_mode(args.mode);
    if (!mode) throw nsa::DataError("unknown mode '" + args.mode + "'");

    const auto src = nsa::resize_bilinear(nsa::pngio::read_image(args.source_path), args.size,
                                          args.size);
    const auto dst = nsa::resize_bilinear(nsa::pngio::read_image(args.dest_path), args.size,
                                          args.size);
    if (src.channels() != dst.channels())
        throw nsa::DataError("source and destination images must share a channel count");

    nsa::RngStream rng(args.seed);
    const auto sample =
        nsa::pipeline::generate_sample(src, dst, cfg, *mode, rng, args.filter_window);

    nsa::pngio::write_png8(sample.image, args.output_prefix + "_image.png");
    nlohmann::json labels;
    for (const auto& [name, label] : sample.labels) {
        const std::string file = args.output_prefix + "_label_" + name + ".png";
        nsa::pngio::write_png16(nsa::pipeline::encode_label(label), label.width, label.height,
                                file);
        labels[name] = file;
    }

    nlohmann::json placements = nlohmann::json::array();
    for (const auto& p : sample.placements)
        placements.push_back(nsa::pipeline::detail::placement_json(p));
    nlohmann::json info{{"mode", args.mode}, {"seed", args.seed}, {"labels", labels},
                        {"placements", placements}};
    if (!sample.alphas.empty()) info["alphas"] = sample.alphas;
    std::cout << info.dump(2) << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string pred_dir;
    std::string truth_dir;
    std::string output_path;
    double fpr_limit = 0.3;
    int connectivity = 8;
    bool resample_256 = false;
};

int run_eval(const EvalArgs& args) {
    nsa::pipeline::EvalOptions options;
    options.fpr_limit = args.fpr_limit;
    options.connectivity = args.connectivity;
    options.resample_256 = args.resample_256;

    const auto report = nsa::pipeline::evaluate(args.pred_dir, args.truth_dir, options);
    const auto json = nsa::pipeline::report_json(report, options);
    if (args.output_path.empty()) {
        std::cout << json.dump(2) << "\n";
    } else {
        std::ofstream out(args.output_path, std::ios::trunc);
        if (!out) throw nsa::DataError("cannot write " + args.output_path);
        out << json.dump(2) << "\n";
        std::cout << "wrote " << args.output_path << "\n";
    }
    return kExitOk;
}

int run_config_check(const std::vector<std::string>& paths) {
    bool all_ok = true;
    for (const auto& path : paths) {
        try {
            const auto cfg = nsa::pipeline::load_class_config(path);
            std::cout << path << ": ok (name=" << (cfg.name.empty() ? "?" : cfg.name)
                      << ", n_max=" << cfg.n_max << ", constraints="
                      << (cfg.constraints_enabled() ? "on" : "off") << ")\n";
        } catch (const nsa::ConfigError& e) {
            std::cerr << path << ": " << e.what() << "\n";
            all_ok = false;
        } catch (const nsa::DataError& e) {
            std::cerr << e.what() << "\n";
            all_ok = false;
        }
    }
    return all_ok ? kExitOk : kExitData;
}

struct DemoArgs {
    std::string config_path;
    std::string image_a;
    std::string image_b;
    std::string output_path = "demo.png";
    std::uint64_t seed = 0;
};

int run_demo_cmd(const DemoArgs& args) {
    const auto cfg = nsa::pipeline::load_class_config(args.config_path);
    const auto a = nsa::pngio::read_image(args.image_a);
    const auto b = nsa::pngio::read_image(args.image_b);
    const auto demo = nsa::pipeline::run_demo(a, b, cfg, args.seed);
    nsa::pngio::write_png8(demo.composite, args.output_path);

    nlohmann::json stats;
    for (const auto& [name, value] : demo.boundary_gradient) stats[name] = value;
    std::cout << nlohmann::json{{"composite", args.output_path},
                                {"columns",
                                 {"original", "cutpaste", "fpi", "pii", "nsa"}},
                                {"boundary_gradient", stats}}
                     .dump(2)
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nsa-forge: natural synthetic anomaly generation and evaluation"};
    app.require_subcommand(1);

    SynthesizeArgs syn;
    auto* syn_cmd = app.add_subcommand("synthesize", "generate a synthetic anomaly dataset");
    syn_cmd->add_option("--config", syn.config_path, "class config file")->required();
    syn_cmd->add_option("--input", syn.input_dir, "directory of normal images")->required();
    syn_cmd->add_option("--output", syn.output_dir, "output directory")->required();
    syn_cmd->add_option("--count", syn.count, "number of samples to emit");
    syn_cmd->add_option("--seed", syn.seed, "base seed");
    const std::vector<std::string> kModes{"nsa-binary", "nsa-continuous", "nsa-logistic",
                                          "cutpaste",   "fpi",            "pii"};
    const std::vector<std::string> kAblations{"A", "B", "C", "D"};
    const std::vector<std::string> kRecipes{"none", "object", "object-rot", "texture", "cxr"};
    syn_cmd->add_option("--mode", syn.mode,
                        "nsa-binary|nsa-continuous|nsa-logistic|cutpaste|fpi|pii")
        ->check(CLI::IsMember(kModes));
    syn_cmd->add_option("--workers", syn.workers, "worker threads (env NSA_FORGE_WORKERS)");
    syn_cmd->add_option("--ablation", syn.ablation, "A|B|C|D")->check(CLI::IsMember(kAblations));
    syn_cmd->add_option("--preprocess", syn.preprocess, "none|object|object-rot|texture|cxr")
        ->check(CLI::IsMember(kRecipes));
    syn_cmd->add_option("--size", syn.size, "resize target for --preprocess none");
    syn_cmd->add_option("--filter-window", syn.filter_window, "median filter window");

    BlendArgs blend;
    auto* blend_cmd = app.add_subcommand("blend", "blend one image pair (debugging)");
    blend_cmd->add_option("--config", blend.config_path, "class config file")->required();
    blend_cmd->add_option("--source", blend.source_path, "source image")->required();
    blend_cmd->add_option("--dest", blend.dest_path, "destination image")->required();
    blend_cmd->add_option("--output", blend.output_prefix, "output file prefix")->required();
    blend_cmd->add_option("--mode", blend.mode, "task mode")->check(CLI::IsMember(kModes));
    blend_cmd->add_option("--seed", blend.seed, "seed");
    blend_cmd->add_option("--ablation", blend.ablation, "A|B|C|D")
        ->check(CLI::IsMember(kAblations));
    blend_cmd->add_option("--size", blend.size, "working resolution");
    blend_cmd->add_option("--filter-window", blend.filter_window, "median filter window");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "score prediction maps against truth masks");
    eval_cmd->add_option("--pred", eval.pred_dir, "directory of prediction maps")->required();
    eval_cmd->add_option("--truth", eval.truth_dir, "directory of truth masks")->required();
    eval_cmd->add_option("--output", eval.output_path, "write the JSON report here");
    eval_cmd->add_option("--fpr-limit", eval.fpr_limit, "PRO false-positive-rate limit");
    eval_cmd->add_option("--connectivity", eval.connectivity, "4 or 8")
        ->check(CLI::IsMember({4, 8}));
    eval_cmd->add_flag("--resample-256", eval.resample_256,
                       "resample maps to 256x256 before scoring");

    std::vector<std::string> check_paths;
    auto* config_cmd = app.add_subcommand("config", "config file utilities");
    auto* check_cmd = config_cmd->add_subcommand("check", "validate config files");
    check_cmd->add_option("files", check_paths, "config files")->required();

    DemoArgs demo;
    auto* demo_cmd = app.add_subcommand("demo", "composite of the four task variants");
    demo_cmd->add_option("--config", demo.config_path, "class config file")->required();
    demo_cmd->add_option("--image-a", demo.image_a, "source image")->required();
    demo_cmd->add_option("--image-b", demo.image_b, "destination image")->required();
    demo_cmd->add_option("--output", demo.output_path, "composite output path");
    demo_cmd->add_option("--seed", demo.seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (syn_cmd->parsed()) return run_synthesize(syn);
        if (blend_cmd->parsed()) return run_blend(blend);
        if (eval_cmd->parsed()) return run_eval(eval);
        if (config_cmd->parsed()) {
            if (!check_cmd->parsed()) {
                std::cerr << "usage: nsa_forge config check <files...>\n";
                return kExitUsage;
            }
            return run_config_check(check_paths);
        }
        if (demo_cmd->parsed()) return run_demo_cmd(demo);
    } catch (const nsa::PlacementError& e) {
        std::cerr << "placement exhausted: " << e.what() << "\n";
        return kExitPlacement;
    } catch (const nsa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitData;
    } catch (const nsa::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const nsa::MetricError& e) {
        std::cerr << "metric undefined: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
