#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "omem/components.hpp"
#include "omem/population.hpp"
#include "omem/serialize.hpp"
#include "omem/world.hpp"

namespace omem {

enum class ComponentKind { oracle, noisy };

inline ComponentKind parse_component_kind(const std::string& s) {
    if (s == "oracle") return ComponentKind::oracle;
    if (s == "noisy") return ComponentKind::noisy;
    throw std::invalid_argument("unknown component kind: " + s);
}

inline std::string to_string(ComponentKind kind) {
    return kind == ComponentKind::oracle ? "oracle" : "noisy";
}

/// Everything one experiment needs: the world recipe, the perception
/// noise, the population thresholds, retrieval settings, and the seed that
/// pins all of it down.
struct ExperimentConfig {
    WorldConfig world;
    NoiseConfig noise;
    PopulationConfig population;
    ByteCosts costs;
    ComponentKind tracker = ComponentKind::oracle;
    ComponentKind discoverer = ComponentKind::oracle;
    double match_threshold = 0.5;
    std::size_t query_count = 50;
    double fraction = 1.0;  // processed prefix of the stream
    std::uint64_t seed = 1;

    void validate() const {
        world.validate();
        noise.validate();
        population.validate();
        if (match_threshold < 0.0 || match_threshold > 1.0)
            throw std::invalid_argument("config: match_threshold outside [0,1]");
        if (fraction <= 0.0 || fraction > 1.0)
            throw std::invalid_argument("config: fraction outside (0,1]");
    }
};

namespace detail {

inline double parse_double(const std::string& v) {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
    return d;
}

inline std::int64_t parse_int(const std::string& v) {
    std::size_t pos = 0;
    const std::int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return i;
}

inline std::uint64_t parse_uint(const std::string& v) {
    const std::int64_t i = parse_int(v);
    if (i < 0) throw std::invalid_argument("negative value: " + v);
    return static_cast<std::uint64_t>(i);
}

}  // namespace detail

/// Applies one `key = value` assignment. Shared by the config-file parser
/// and the CLI's --set overrides, so the two surfaces cannot drift.
inline void apply_config_value(ExperimentConfig& c, const std::string& key,
                               const std::string& value) {
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_uint;
    static const std::map<std::string, std::function<void(ExperimentConfig&, const std::string&)>>
        setters = {
            {"seed", [](auto& c, const auto& v) { c.seed = parse_uint(v); }},
            {"fraction", [](auto& c, const auto& v) { c.fraction = parse_double(v); }},
            {"query_count", [](auto& c, const auto& v) { c.query_count = parse_uint(v); }},
            {"match_threshold", [](auto& c, const auto& v) { c.match_threshold = parse_double(v); }},
            {"tracker", [](auto& c, const auto& v) { c.tracker = parse_component_kind(v); }},
            {"discoverer", [](auto& c, const auto& v) { c.discoverer = parse_component_kind(v); }},

            {"world.objects", [](auto& c, const auto& v) { c.world.object_count = parse_int(v); }},
            {"world.frames", [](auto& c, const auto& v) { c.world.frames = parse_int(v); }},
            {"world.width", [](auto& c, const auto& v) { c.world.frame_width = parse_double(v); }},
            {"world.height", [](auto& c, const auto& v) { c.world.frame_height = parse_double(v); }},
            {"world.appearance_dim",
             [](auto& c, const auto& v) { c.world.appearance_dim = parse_uint(v); }},
            {"world.appearance_mode",
             [](auto& c, const auto& v) {
                 if (v == "orthogonal") {
                     c.world.appearance_mode = WorldConfig::AppearanceMode::orthogonal;
                 } else if (v == "gaussian") {
                     c.world.appearance_mode = WorldConfig::AppearanceMode::gaussian;
                 } else {
                     throw std::invalid_argument("unknown appearance mode: " + v);
                 }
             }},
            {"world.segments_min", [](auto& c, const auto& v) { c.world.segments_min = parse_int(v); }},
            {"world.segments_max", [](auto& c, const auto& v) { c.world.segments_max = parse_int(v); }},
            {"world.segment_len_min",
             [](auto& c, const auto& v) { c.world.segment_len_min = parse_int(v); }},
            {"world.segment_len_max",
             [](auto& c, const auto& v) { c.world.segment_len_max = parse_int(v); }},
            {"world.gap_min", [](auto& c, const auto& v) { c.world.gap_min = parse_int(v); }},
            {"world.gap_max", [](auto& c, const auto& v) { c.world.gap_max = parse_int(v); }},
            {"world.motion_sigma",
             [](auto& c, const auto& v) { c.world.motion_sigma = parse_double(v); }},
            {"world.distinctiveness_lo",
             [](auto& c, const auto& v) { c.world.distinctiveness_lo = parse_double(v); }},
            {"world.distinctiveness_hi",
             [](auto& c, const auto& v) { c.world.distinctiveness_hi = parse_double(v); }},

            {"noise.p_det", [](auto& c, const auto& v) { c.noise.p_det = parse_double(v); }},
            {"noise.false_positive_rate",
             [](auto& c, const auto& v) { c.noise.false_positive_rate = parse_double(v); }},
            {"noise.box_jitter_sigma",
             [](auto& c, const auto& v) { c.noise.box_jitter_sigma = parse_double(v); }},
            {"noise.tp_score_lo", [](auto& c, const auto& v) { c.noise.tp_score_lo = parse_double(v); }},
            {"noise.tp_score_hi", [](auto& c, const auto& v) { c.noise.tp_score_hi = parse_double(v); }},
            {"noise.fp_score_lo", [](auto& c, const auto& v) { c.noise.fp_score_lo = parse_double(v); }},
            {"noise.fp_score_hi", [](auto& c, const auto& v) { c.noise.fp_score_hi = parse_double(v); }},
            {"noise.p_persist", [](auto& c, const auto& v) { c.noise.p_persist = parse_double(v); }},
            {"noise.p_reacquire",
             [](auto& c, const auto& v) { c.noise.p_reacquire = parse_double(v); }},
            {"noise.drift_sigma", [](auto& c, const auto& v) { c.noise.drift_sigma = parse_double(v); }},
            {"noise.id_switch_prob",
             [](auto& c, const auto& v) { c.noise.id_switch_prob = parse_double(v); }},
            {"noise.track_score_lo",
             [](auto& c, const auto& v) { c.noise.track_score_lo = parse_double(v); }},
            {"noise.track_score_hi",
             [](auto& c, const auto& v) { c.noise.track_score_hi = parse_double(v); }},
            {"noise.loss_score_lo",
             [](auto& c, const auto& v) { c.noise.loss_score_lo = parse_double(v); }},
            {"noise.loss_score_hi",
             [](auto& c, const auto& v) { c.noise.loss_score_hi = parse_double(v); }},
            {"noise.feature_sigma",
             [](auto& c, const auto& v) { c.noise.feature_sigma = parse_double(v); }},

            {"population.min_track_score",
             [](auto& c, const auto& v) { c.population.min_track_score = parse_double(v); }},
            {"population.min_detection_score",
             [](auto& c, const auto& v) { c.population.min_detection_score = parse_double(v); }},
            {"population.max_new_object_iou",
             [](auto& c, const auto& v) { c.population.max_new_object_iou = parse_double(v); }},
            {"population.duplicate_track_iou",
             [](auto& c, const auto& v) { c.population.duplicate_track_iou = parse_double(v); }},
            {"population.patch_policy",
             [](auto& c, const auto& v) { c.population.patch_policy = parse_patch_policy(v); }},
            {"population.assessor_threshold",
             [](auto& c, const auto& v) { c.population.assessor_threshold = parse_double(v); }},
            {"population.budget_bytes",
             [](auto& c, const auto& v) { c.population.budget_bytes = parse_uint(v); }},

            {"costs.full_frame_bytes",
             [](auto& c, const auto& v) { c.costs.full_frame_bytes = parse_uint(v); }},
            {"costs.patch_bytes", [](auto& c, const auto& v) { c.costs.patch_bytes = parse_uint(v); }},
            {"costs.record_bytes",
             [](auto& c, const auto& v) { c.costs.record_bytes = parse_uint(v); }},
        };
    auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("unknown config key: " + key);
    it->second(c, value);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace detail

/// Plain `key = value` file, one assignment per line, `#` comments.
inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            apply_config_value(config, key, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return config;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    ExperimentConfig config = parse_config_text(buf.str());
    config.validate();
    return config;
}

/// Full echo of every effective value, defaults included; embedded into
/// reports for provenance.
inline json experiment_config_to_json(const ExperimentConfig& c) {
    return {{"seed", c.seed},
            {"fraction", c.fraction},
            {"query_count", c.query_count},
            {"match_threshold", c.match_threshold},
            {"tracker", to_string(c.tracker)},
            {"discoverer", to_string(c.discoverer)},
            {"world", c.world},
            {"noise",
             {{"p_det", c.noise.p_det},
              {"false_positive_rate", c.noise.false_positive_rate},
              {"box_jitter_sigma", c.noise.box_jitter_sigma},
              {"tp_score_lo", c.noise.tp_score_lo},
              {"tp_score_hi", c.noise.tp_score_hi},
              {"fp_score_lo", c.noise.fp_score_lo},
              {"fp_score_hi", c.noise.fp_score_hi},
              {"p_persist", c.noise.p_persist},
              {"p_reacquire", c.noise.p_reacquire},
              {"drift_sigma", c.noise.drift_sigma},
              {"id_switch_prob", c.noise.id_switch_prob},
              {"track_score_lo", c.noise.track_score_lo},
              {"track_score_hi", c.noise.track_score_hi},
              {"loss_score_lo", c.noise.loss_score_lo},
              {"loss_score_hi", c.noise.loss_score_hi},
              {"feature_sigma", c.noise.feature_sigma}}},
            {"population",
             {{"min_track_score", c.population.min_track_score},
              {"min_detection_score", c.population.min_detection_score},
              {"max_new_object_iou", c.population.max_new_object_iou},
              {"duplicate_track_iou", c.population.duplicate_track_iou},
              {"patch_policy", to_string(c.population.patch_policy)},
              {"assessor_threshold", c.population.assessor_threshold},
              {"budget_bytes", c.population.budget_bytes}}},
            {"costs", c.costs}};
}

}  // namespace omem
