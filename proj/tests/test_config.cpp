#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "nsa/config.hpp"

using namespace nsa;
using namespace nsa::pipeline;

namespace {

std::string config_dir() {
    if (const char* env = std::getenv("NSA_FORGE_CONFIG_DIR")) return env;
    return "configs";
}

sampler::ClassConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_class_config(in);
}

const std::string kMinimal =
    "n_max = 3\n"
    "h_min = 0.06\nh_max = 0.8\nw_min = 0.06\nw_max = 0.8\n"
    "s_min = 0.7\ns_max = 1.3\n"
    "logistic_y0 = 7\nlogistic_k = 1/3\n";

}  // namespace

TEST_CASE("all shipped configs parse and round-trip") {
    namespace fs = std::filesystem;
    int count = 0;
    for (const auto& entry : fs::directory_iterator(config_dir())) {
        if (entry.path().extension() != ".cfg") continue;
        ++count;
        const auto cfg = load_class_config(entry.path().string());
        const auto text = serialize_class_config(cfg);
        const auto again = parse_text(text);
        CHECK(serialize_class_config(again) == text);
        CHECK(again.n_max == cfg.n_max);
        CHECK(again.w_min == cfg.w_min);
        CHECK(again.logistic_k == cfg.logistic_k);
        CHECK(again.background.has_value() == cfg.background.has_value());
        if (cfg.background) {
            CHECK(again.background->background_b == cfg.background->background_b);
            CHECK(again.background->t_overlap == cfg.background->t_overlap);
        }
    }
    CHECK(count == 17);
}

TEST_CASE("shipped spot values match the hyperparameter table") {
    const auto dir = config_dir();
    const auto bottle = load_class_config(dir + "/bottle.cfg");
    CHECK(bottle.logistic_y0 == 24.0);
    CHECK(bottle.logistic_k == 1.0 / 12.0);
    CHECK(bottle.background.has_value());
    CHECK(bottle.background->background_b == 200.0);
    CHECK(bottle.background->t_brightness == 60.0);
    CHECK(bottle.gradient_mode == poisson::GradientMode::source);

    const auto screw = load_class_config(dir + "/screw.cfg");
    CHECK(screw.n_max == 4);
    CHECK(screw.logistic_y0 == 3.0);
    CHECK(screw.logistic_k == 1.0);
    CHECK(screw.w_min == 0.06);
    CHECK(screw.w_max == 0.24);
    CHECK(screw.background->background_b == 200.0);
    CHECK(screw.background->t_brightness == 60.0);
    CHECK(screw.background->t_object == 0.50);

    const auto carpet = load_class_config(dir + "/carpet.cfg");
    CHECK(carpet.s_min == 0.5);
    CHECK(carpet.s_max == 2.0);
    CHECK(carpet.n_max == 4);
    CHECK_FALSE(carpet.background.has_value());
    CHECK(carpet.gradient_mode == poisson::GradientMode::mixed);

    const auto cable = load_class_config(dir + "/cable.cfg");
    CHECK_FALSE(cable.background.has_value());
    CHECK(cable.w_min == 0.10);

    const auto cxr = load_class_config(dir + "/rcxr_male.cfg");
    CHECK(cxr.background->background_b == 0.0);
    CHECK(cxr.background->t_overlap == 0.70);
    CHECK(cxr.gradient_mode == poisson::GradientMode::mixed);
}

TEST_CASE("parser diagnostics carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_text("n_max = 3\nbogus_key = 1\n"),
                         doctest::Contains("unknown key"), ConfigError);

    try {
        parse_text("n_max = 3\nbogus_key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
    }

    // bound violation names the constraint
    CHECK_THROWS_WITH_AS(parse_text("n_max = 1\n"
                                    "h_min = 0.06\nh_max = 0.8\n"
                                    "w_min = 0.9\nw_max = 0.2\n"
                                    "s_min = 0.7\ns_max = 1.3\n"
                                    "logistic_y0 = 7\nlogistic_k = 1/3\n"),
                         doctest::Contains("w_min <= w_max"), ConfigError);

    CHECK_THROWS_AS(parse_text(kMinimal + "n_max = 4\n"), ConfigError);      // duplicate
    CHECK_THROWS_AS(parse_text(kMinimal + "gradient_mode = foo\n"), ConfigError);
    CHECK_THROWS_AS(parse_text(kMinimal + "background_b = 200\n"), ConfigError);  // partial block
    CHECK_THROWS_AS(parse_text("h_min = 0.06\n"), ConfigError);              // missing keys
    CHECK_THROWS_AS(parse_text("n_max\n"), ConfigError);                     // no '='
    CHECK_THROWS_AS(parse_text(kMinimal + "t_object = 2/0\n"), ConfigError); // bad rational
}

TEST_CASE("missing background block disables constraints") {
    const auto cfg = parse_text(kMinimal);
    CHECK_FALSE(cfg.constraints_enabled());
    CHECK(cfg.n_max == 3);
    CHECK(cfg.logistic_k == 1.0 / 3.0);
}

TEST_CASE("rationals parse exactly and survive serialization") {
    const auto cfg = parse_text(kMinimal);
    CHECK(cfg.logistic_k == 1.0 / 3.0);
    const auto again = parse_text(serialize_class_config(cfg));
    CHECK(again.logistic_k == cfg.logistic_k);
}
