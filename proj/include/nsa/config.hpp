#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nsa/errors.hpp"
#include "nsa/sampler.hpp"

// Human-editable key-value class config files. Numeric values accept decimals
// and exact rationals ("1/12"); serialization emits shortest round-trip
// decimals, so parse -> serialize -> parse is value-identical.

namespace nsa::pipeline {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& text, int line) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        const std::string num = trim(text.substr(0, slash));
        const std::string den = trim(text.substr(slash + 1));
        char* end = nullptr;
        const double n = std::strtod(num.c_str(), &end);
        if (end != num.c_str() + num.size() || num.empty())
            throw ConfigError(line, "bad numerator in '" + text + "'");
        const double d = std::strtod(den.c_str(), &end);
        if (end != den.c_str() + den.size() || den.empty() || d == 0.0)
            throw ConfigError(line, "bad denominator in '" + text + "'");
        return n / d;
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || text.empty())
        throw ConfigError(line, "bad number '" + text + "'");
    return v;
}

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct RawConfig {
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    int line(const std::string& key) const {
        auto it = lines.find(key);
        return it == lines.end() ? 0 : it->second;
    }
};

inline RawConfig parse_raw(std::istream& in) {
    static const char* kKnownKeys[] = {
        "name",         "n_max",       "h_min",       "h_max",          "w_min",
        "w_max",        "background_b", "t_brightness", "t_object",      "t_overlap",
        "s_min",        "s_max",       "logistic_y0", "logistic_k",     "gradient_mode",
        "shape_mode",   "selection_mode"};

    RawConfig raw;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(lineno, "expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        bool known = false;
        for (const char* k : kKnownKeys)
            if (key == k) known = true;
        if (!known) throw ConfigError(lineno, "unknown key '" + key + "'");
        if (raw.has(key)) throw ConfigError(lineno, "duplicate key '" + key + "'");
        if (value.empty()) throw ConfigError(lineno, "empty value for '" + key + "'");
        raw.values[key] = value;
        raw.lines[key] = lineno;
    }
    return raw;
}

}  // namespace detail

inline sampler::ClassConfig parse_class_config(std::istream& in) {
    using sampler::SelectionMode;
    using sampler::ShapeMode;

    auto raw = detail::parse_raw(in);
    auto require = [&](const std::string& key) -> std::string {
        if (!raw.has(key)) throw ConfigError(0, "missing required key '" + key + "'");
        return raw.values[key];
    };
    auto number = [&](const std::string& key) {
        return detail::parse_number(require(key), raw.line(key));
    };

    sampler::ClassConfig cfg;
    if (raw.has("name")) cfg.name = raw.values["name"];

    const double n_max = number("n_max");
    if (n_max < 1.0 || n_max != static_cast<int>(n_max))
        throw ConfigError(raw.line("n_max"), "n_max must be a positive integer");
    cfg.n_max = static_cast<int>(n_max);

    cfg.h_min = number("h_min");
    cfg.h_max = number("h_max");
    cfg.w_min = number("w_min");
    cfg.w_max = number("w_max");
    cfg.s_min = number("s_min");
    cfg.s_max = number("s_max");
    cfg.logistic_y0 = number("logistic_y0");
    cfg.logistic_k = number("logistic_k");

    const bool has_bg = raw.has("background_b") || raw.has("t_brightness") ||
                        raw.has("t_object") || raw.has("t_overlap");
    if (has_bg) {
        for (const char* key : {"background_b", "t_brightness", "t_object", "t_overlap"})
            if (!raw.has(key))
                throw ConfigError(0, std::string("background block incomplete: missing '") +
                                         key + "'");
        sampler::BackgroundConstraints bg;
        bg.background_b = number("background_b");
        bg.t_brightness = number("t_brightness");
        bg.t_object = number("t_object");
        bg.t_overlap = number("t_overlap");
        cfg.background = bg;
    }

    if (raw.has("gradient_mode")) {
        const std::string& v = raw.values["gradient_mode"];
        if (v == "source")
            cfg.gradient_mode = poisson::GradientMode::source;
        else if (v == "mixed")
            cfg.gradient_mode = poisson::GradientMode::mixed;
        else
            throw ConfigError(raw.line("gradient_mode"),
                              "gradient_mode must be 'source' or 'mixed'");
    }
    if (raw.has("shape_mode")) {
        const std::string& v = raw.values["shape_mode"];
        if (v == "rect")
            cfg.shape_mode = ShapeMode::rect;
        else if (v == "ellipse_union")
            cfg.shape_mode = ShapeMode::ellipse_union;
        else
            throw ConfigError(raw.line("shape_mode"),
                              "shape_mode must be 'rect' or 'ellipse_union'");
    }
    if (raw.has("selection_mode")) {
        const std::string& v = raw.values["selection_mode"];
        if (v == "nsa")
            cfg.selection_mode = SelectionMode::nsa;
        else if (v == "cutpaste_style")
            cfg.selection_mode = SelectionMode::cutpaste_style;
        else if (v == "fpi_style")
            cfg.selection_mode = SelectionMode::fpi_style;
        else
            throw ConfigError(raw.line("selection_mode"),
                              "selection_mode must be 'nsa', 'cutpaste_style' or 'fpi_style'");
    }

    // bound checks with line anchors
    if (!(0.0 < cfg.w_min && cfg.w_min <= cfg.w_max && cfg.w_max <= 1.0))
        throw ConfigError(raw.line("w_max"), "require 0 < w_min <= w_max <= 1");
    if (!(0.0 < cfg.h_min && cfg.h_min <= cfg.h_max && cfg.h_max <= 1.0))
        throw ConfigError(raw.line("h_max"), "require 0 < h_min <= h_max <= 1");
    if (!(cfg.s_min <= 1.0 && 1.0 <= cfg.s_max))
        throw ConfigError(raw.line("s_max"), "require s_min <= 1 <= s_max");
    if (cfg.logistic_k <= 0.0)
        throw ConfigError(raw.line("logistic_k"), "logistic_k must be > 0");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, e.what());
    }
    return cfg;
}

inline sampler::ClassConfig load_class_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    try {
        return parse_class_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(e.line(), path + ": " + std::string(e.what()));
    }
}

inline std::string serialize_class_config(const sampler::ClassConfig& cfg) {
    using detail::format_number;
    std::ostringstream out;
    if (!cfg.name.empty()) out << "name = " << cfg.name << "\n";
    out << "n_max = " << cfg.n_max << "\n";
    out << "h_min = " << format_number(cfg.h_min) << "\n";
    out << "h_max = " << format_number(cfg.h_max) << "\n";
    out << "w_min = " << format_number(cfg.w_min) << "\n";
    out << "w_max = " << format_number(cfg.w_max) << "\n";
    if (cfg.background) {
        out << "background_b = " << format_number(cfg.background->background_b) << "\n";
        out << "t_brightness = " << format_number(cfg.background->t_brightness) << "\n";
        out << "t_object = " << format_number(cfg.background->t_object) << "\n";
        out << "t_overlap = " << format_number(cfg.background->t_overlap) << "\n";
    }
    out << "s_min = " << format_number(cfg.s_min) << "\n";
    out << "s_max = " << format_number(cfg.s_max) << "\n";
    out << "logistic_y0 = " << format_number(cfg.logistic_y0) << "\n";
    out << "logistic_k = " << format_number(cfg.logistic_k) << "\n";
    out << "gradient_mode = "
        << (cfg.gradient_mode == poisson::GradientMode::source ? "source" : "mixed") << "\n";
    out << "shape_mode = "
        << (cfg.shape_mode == sampler::ShapeMode::rect ? "rect" : "ellipse_union") << "\n";
    switch (cfg.selection_mode) {
        case sampler::SelectionMode::nsa: out << "selection_mode = nsa\n"; break;
        case sampler::SelectionMode::cutpaste_style: out << "selection_mode = cutpaste_style\n"; break;
        case sampler::SelectionMode::fpi_style: out << "selection_mode = fpi_style\n"; break;
    }
    return out.str();
}

}  // namespace nsa::pipeline
