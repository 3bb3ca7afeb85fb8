#include "telemafuse/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "telemafuse/errors.hpp"
#include "telemafuse/util.hpp"

namespace tmf::app {

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<bool(PipelineConfig&, std::string_view)> set;
};

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

Field int_field(std::string section, std::string key, int PipelineConfig::* member) {
    return {std::move(section), std::move(key),
            [member](const PipelineConfig& c) { return format_i64(c.*member); },
            [member](PipelineConfig& c, std::string_view v) {
                std::int64_t out = 0;
                if (!try_parse_i64(v, out)) return false;
                c.*member = static_cast<int>(out);
                return true;
            }};
}

template <typename Sub>
Field int_field(std::string section, std::string key, Sub PipelineConfig::* sub,
                int Sub::* member) {
    return {std::move(section), std::move(key),
            [sub, member](const PipelineConfig& c) { return format_i64(c.*sub.*member); },
            [sub, member](PipelineConfig& c, std::string_view v) {
                std::int64_t out = 0;
                if (!try_parse_i64(v, out)) return false;
                c.*sub.*member = static_cast<int>(out);
                return true;
            }};
}

Field double_field(std::string section, std::string key, double PipelineConfig::* member) {
    return {std::move(section), std::move(key),
            [member](const PipelineConfig& c) { return format_double(c.*member); },
            [member](PipelineConfig& c, std::string_view v) {
                double out = 0;
                if (!try_parse_double(v, out)) return false;
                c.*member = out;
                return true;
            }};
}

template <typename Sub>
Field double_field(std::string section, std::string key, Sub PipelineConfig::* sub,
                   double Sub::* member) {
    return {std::move(section), std::move(key),
            [sub, member](const PipelineConfig& c) { return format_double(c.*sub.*member); },
            [sub, member](PipelineConfig& c, std::string_view v) {
                double out = 0;
                if (!try_parse_double(v, out)) return false;
                c.*sub.*member = out;
                return true;
            }};
}

template <typename Enum>
Field enum_field(std::string section, std::string key, Enum PipelineConfig::* member,
                 std::vector<std::pair<std::string, Enum>> mapping) {
    return {std::move(section), std::move(key),
            [member, mapping](const PipelineConfig& c) {
                for (const auto& [name, value] : mapping) {
                    if (c.*member == value) return name;
                }
                return std::string("?");
            },
            [member, mapping](PipelineConfig& c, std::string_view v) {
                for (const auto& [name, value] : mapping) {
                    if (v == name) {
                        c.*member = value;
                        return true;
                    }
                }
                return false;
            }};
}

const std::vector<Field>& field_registry() {
    static const std::vector<Field> fields = [] {
        std::vector<Field> f;
        using PC = PipelineConfig;

        f.push_back(int_field("window", "length_s", &PC::window, &features::WindowSpec::length_s));
        f.push_back(int_field("window", "stride_s", &PC::window, &features::WindowSpec::stride_s));

        f.push_back(int_field("features", "entropy_bins", &PC::features,
                              &features::FeatureConfig::entropy_bins));
        f.push_back(int_field("features", "autocorr_lag", &PC::features,
                              &features::FeatureConfig::autocorr_lag));
        f.push_back({"features", "heading_mode",
                     [](const PC& c) {
                         return std::string(c.features.heading_mode == features::HeadingMode::raw
                                                ? "raw"
                                                : "delta");
                     },
                     [](PC& c, std::string_view v) {
                         if (v == "raw") {
                             c.features.heading_mode = features::HeadingMode::raw;
                         } else if (v == "delta") {
                             c.features.heading_mode = features::HeadingMode::delta;
                         } else {
                             return false;
                         }
                         return true;
                     }});

        f.push_back(double_field("selection", "variance_threshold", &PC::variance_threshold));
        f.push_back(double_field("selection", "correlation_threshold", &PC::correlation_threshold));

        f.push_back(int_field("forest", "n_trees", &PC::forest,
                              &forest::ForestHyperparams::n_trees));
        f.push_back(int_field("forest", "max_depth", &PC::forest,
                              &forest::ForestHyperparams::max_depth));
        f.push_back(int_field("forest", "min_samples_split", &PC::forest,
                              &forest::ForestHyperparams::min_samples_split));
        f.push_back(int_field("forest", "split_features", &PC::forest,
                              &forest::ForestHyperparams::split_features));

        f.push_back(int_field("bagging", "max_features", &PC::bagging,
                              &bagging::BaggingConfig::max_features));
        f.push_back(int_field("bagging", "max_iterations", &PC::bagging,
                              &bagging::BaggingConfig::max_iterations));
        f.push_back({"bagging", "ranking",
                     [](const PC& c) {
                         return std::string(c.bagging.ranking == bagging::RankingMode::oob
                                                ? "oob"
                                                : "resubstitution");
                     },
                     [](PC& c, std::string_view v) {
                         if (v == "oob") {
                             c.bagging.ranking = bagging::RankingMode::oob;
                         } else if (v == "resubstitution") {
                             c.bagging.ranking = bagging::RankingMode::resubstitution;
                         } else {
                             return false;
                         }
                         return true;
                     }});

        f.push_back(double_field("fusion", "w1", &PC::fusion, &fusion::FusionParams::w1));
        f.push_back(double_field("fusion", "w2", &PC::fusion, &fusion::FusionParams::w2));
        f.push_back(double_field("fusion", "epsilon", &PC::fusion,
                                 &fusion::FusionParams::epsilon));

        f.push_back(int_field("evaluation", "folds", &PC::folds));
        f.push_back(enum_field<eval::SplitMode>(
            "evaluation", "split", &PC::split,
            {{"by-driver", eval::SplitMode::by_driver}, {"by-window", eval::SplitMode::by_window}}));
        f.push_back(enum_field<eval::SelectionMode>(
            "evaluation", "selection", &PC::selection,
            {{"per-fold", eval::SelectionMode::per_fold},
             {"global", eval::SelectionMode::global}}));

        f.push_back(int_field("synth", "drivers_per_class", &PC::synth,
                              &SynthSpec::drivers_per_class));
        f.push_back(int_field("synth", "trips_per_driver", &PC::synth,
                              &SynthSpec::trips_per_driver));
        f.push_back(int_field("synth", "duration_s", &PC::synth, &SynthSpec::duration_s));
        f.push_back(int_field("synth", "rate_hz", &PC::synth, &SynthSpec::rate_hz));
        struct ChannelKey {
            const char* suffix;
            double SynthChannelParams::* member;
        };
        static constexpr ChannelKey channel_keys[] = {
            {"level", &SynthChannelParams::level},
            {"reversion", &SynthChannelParams::reversion},
            {"noise", &SynthChannelParams::noise},
            {"driver_sigma", &SynthChannelParams::driver_sigma},
            {"offset", &SynthChannelParams::class1_offset},
        };
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            for (const auto& ck : channel_keys) {
                const std::string key = std::string(channel_names()[c]) + "_" + ck.suffix;
                const auto member = ck.member;
                f.push_back({"synth", key,
                             [c, member](const PC& cfg) {
                                 return format_double(cfg.synth.channels[c].*member);
                             },
                             [c, member](PC& cfg, std::string_view v) {
                                 double out = 0;
                                 if (!try_parse_double(v, out)) return false;
                                 cfg.synth.channels[c].*member = out;
                                 return true;
                             }});
            }
        }

        f.push_back({"run", "seed", [](const PC& c) { return format_u64(c.seed); },
                     [](PC& c, std::string_view v) { return try_parse_u64(v, c.seed); }});
        f.push_back(int_field("run", "threads", &PC::threads));
        return f;
    }();
    return fields;
}

const Field* find_field(const std::string& section, const std::string& key) {
    for (const auto& f : field_registry()) {
        if (f.section == section && f.key == key) return &f;
    }
    return nullptr;
}

bool known_section(const std::string& section) {
    for (const auto& f : field_registry()) {
        if (f.section == section) return true;
    }
    return false;
}

} // namespace

SynthSpec default_synth_spec() {
    SynthSpec spec;
    spec.channels[static_cast<std::size_t>(Channel::speed)] = {62.0, 0.02, 0.9, 6.0, -8.0};
    spec.channels[static_cast<std::size_t>(Channel::accel_x)] = {0.0, 0.15, 0.35, 0.05, 0.0};
    spec.channels[static_cast<std::size_t>(Channel::accel_y)] = {0.0, 0.15, 0.3, 0.05, 0.08};
    spec.channels[static_cast<std::size_t>(Channel::yaw_rate)] = {0.0, 0.1, 2.2, 0.3, -0.4};
    spec.channels[static_cast<std::size_t>(Channel::pitch_rate)] = {0.0, 0.12, 1.1, 0.15, 0.2};
    spec.channels[static_cast<std::size_t>(Channel::roll_rate)] = {0.0, 0.12, 1.0, 0.1, 0.0};
    spec.channels[static_cast<std::size_t>(Channel::heading)] = {180.0, 0.005, 2.0, 60.0, 0.0};
    return spec;
}

void PipelineConfig::validate() const {
    if (window.length_s < 2) throw ConfigError("window length_s must be >= 2");
    if (window.stride_s < 1) throw ConfigError("window stride_s must be >= 1");
    if (features.entropy_bins < 2) throw ConfigError("entropy_bins must be >= 2");
    if (features.autocorr_lag < 1) throw ConfigError("autocorr_lag must be >= 1");
    if (features.autocorr_lag >= window.length_s) {
        throw ConfigError("autocorr_lag must be smaller than window length_s");
    }
    if (variance_threshold < 0) throw ConfigError("variance_threshold must be >= 0");
    if (correlation_threshold < 0 || correlation_threshold > 1) {
        throw ConfigError("correlation_threshold must lie in [0,1]");
    }
    if (forest.n_trees < 1) throw ConfigError("forest n_trees must be >= 1");
    if (forest.max_depth < 0) throw ConfigError("forest max_depth must be >= 0 (0 = unbounded)");
    if (forest.min_samples_split < 2) throw ConfigError("forest min_samples_split must be >= 2");
    if (forest.split_features < 0) {
        throw ConfigError("forest split_features must be >= 0 (0 = sqrt)");
    }
    if (bagging.max_features < 1) throw ConfigError("bagging max_features must be >= 1");
    if (bagging.max_iterations < 3) throw ConfigError("bagging max_iterations must be >= 3");
    fusion.validate();
    if (folds < 2) throw ConfigError("evaluation folds must be >= 2");
    if (synth.drivers_per_class < 1) throw ConfigError("synth drivers_per_class must be >= 1");
    if (synth.trips_per_driver < 1) throw ConfigError("synth trips_per_driver must be >= 1");
    if (synth.duration_s < 2) throw ConfigError("synth duration_s must be >= 2");
    if (synth.rate_hz != 1 && synth.rate_hz != 15) {
        throw ConfigError("synth rate_hz must be 1 or 15");
    }
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (!(synth.channels[c].noise > 0)) {
            throw ConfigError("synth " + std::string(channel_names()[c]) + "_noise must be > 0");
        }
        if (synth.channels[c].driver_sigma < 0) {
            throw ConfigError("synth " + std::string(channel_names()[c]) +
                              "_driver_sigma must be >= 0");
        }
        if (!(synth.channels[c].reversion >= 0 && synth.channels[c].reversion <= 1)) {
            throw ConfigError("synth " + std::string(channel_names()[c]) +
                              "_reversion must lie in [0,1]");
        }
    }
    if (synth.duration_s < 2 * window.length_s) {
        warn("synth duration_s " + std::to_string(synth.duration_s) +
             " is below twice the window length, few windows will survive");
    }
    if (threads < 1) throw ConfigError("run threads must be >= 1");
}

eval::ExperimentSpec PipelineConfig::experiment() const {
    eval::ExperimentSpec spec;
    spec.folds = folds;
    spec.split = split;
    spec.selection = selection;
    spec.variance_threshold = variance_threshold;
    spec.correlation_threshold = correlation_threshold;
    spec.forest = forest;
    spec.bagging = bagging;
    spec.fusion = fusion;
    spec.seed = seed;
    spec.threads = threads;
    return spec;
}

PipelineConfig parse_config_text(std::string_view text, std::string_view source_name) {
    PipelineConfig cfg;
    cfg.synth = default_synth_spec();

    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    std::vector<std::string> seen;

    auto fail = [&](const std::string& what) {
        throw ConfigError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail("malformed section header '" + t + "'");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            if (!known_section(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail("expected key = value, got '" + t + "'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' appears before any section");
        const Field* field = find_field(section, key);
        if (field == nullptr) fail("unknown key '" + key + "' in section [" + section + "]");
        const std::string qualified = section + "." + key;
        if (std::find(seen.begin(), seen.end(), qualified) != seen.end()) {
            fail("duplicate key '" + qualified + "'");
        }
        seen.push_back(qualified);
        if (!field->set(cfg, value)) {
            fail("invalid value '" + value + "' for " + qualified);
        }
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream content;
    content << in.rdbuf();
    return parse_config_text(content.str(), path);
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& field : field_registry()) {
        if (field.section != section) {
            if (!out.empty()) out += "\n";
            section = field.section;
            out += "[" + section + "]\n";
        }
        out += field.key + " = " + field.get(cfg) + "\n";
    }
    return out;
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << serialize_config(cfg);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

} // namespace tmf::app
