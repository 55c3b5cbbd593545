#include "fare/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fare/adamax.hpp"
#include "fare/dsp.hpp"

namespace fare {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        require(pos == v.size(), ErrorCategory::config,
                strfmt("key '%s': trailing characters in value '%s'", key.c_str(), v.c_str()));
        return d;
    } catch (const FareError&) {
        throw;
    } catch (const std::exception&) {
        throw FareError(ErrorCategory::config,
                        strfmt("key '%s': cannot parse '%s' as a number", key.c_str(), v.c_str()));
    }
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    require(d >= 0 && d == std::floor(d) && d <= 1e15, ErrorCategory::config,
            strfmt("key '%s': expected a non-negative integer, got '%s'", key.c_str(), v.c_str()));
    return static_cast<std::size_t>(d);
}

std::string fmt_double(double v) {
    for (int prec = 1; prec <= 17; ++prec) {
        std::string cand = strfmt("%.*g", prec, v);
        if (std::stod(cand) == v) return cand;
    }
    return strfmt("%.17g", v);
}

struct KeyEntry {
    std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const ExperimentConfig&)> get;
    const char* doc;
};

using Registry = std::map<std::string, KeyEntry>;

const std::vector<std::pair<std::string, KeyEntry>>& key_list() {
    static const auto* keys = [] {
        auto* out = new std::vector<std::pair<std::string, KeyEntry>>();
        auto add_d = [out](const char* key, const char* doc,
                           std::function<double&(ExperimentConfig&)> ref) {
            out->emplace_back(key, KeyEntry{[ref](ExperimentConfig& c, const std::string& k,
                                                  const std::string& v) { ref(c) = parse_double(k, v); },
                                            [ref](const ExperimentConfig& c) {
                                                return fmt_double(ref(const_cast<ExperimentConfig&>(c)));
                                            },
                                            doc});
        };
        auto add_n = [out](const char* key, const char* doc,
                           std::function<std::size_t&(ExperimentConfig&)> ref) {
            out->emplace_back(key, KeyEntry{[ref](ExperimentConfig& c, const std::string& k,
                                                  const std::string& v) { ref(c) = parse_count(k, v); },
                                            [ref](const ExperimentConfig& c) {
                                                return std::to_string(
                                                    ref(const_cast<ExperimentConfig&>(c)));
                                            },
                                            doc});
        };

        add_d("radar.carrier_freq_hz", "chirp start frequency",
              [](ExperimentConfig& c) -> double& { return c.radar.carrier_freq_hz; });
        add_d("radar.bandwidth_hz", "chirp sweep bandwidth",
              [](ExperimentConfig& c) -> double& { return c.radar.bandwidth_hz; });
        add_n("radar.samples_per_chirp", "fast-time samples, power of two",
              [](ExperimentConfig& c) -> std::size_t& { return c.radar.samples_per_chirp; });
        add_n("radar.chirps_per_frame", "slow-time chirps, power of two",
              [](ExperimentConfig& c) -> std::size_t& { return c.radar.chirps_per_frame; });
        add_d("radar.chirp_duration_s", "active sweep time; samples = adc_rate * duration",
              [](ExperimentConfig& c) -> double& { return c.radar.chirp_duration_s; });
        add_d("radar.frame_period_s", "frame repetition interval; chirps are spread uniformly",
              [](ExperimentConfig& c) -> double& { return c.radar.frame_period_s; });
        add_d("radar.adc_rate_hz", "IF sampling rate",
              [](ExperimentConfig& c) -> double& { return c.radar.adc_rate_hz; });
        add_n("radar.num_rx", "receive antennas",
              [](ExperimentConfig& c) -> std::size_t& { return c.radar.num_rx; });
        add_d("radar.noise_std", "per-component std of complex receiver noise",
              [](ExperimentConfig& c) -> double& { return c.radar.noise_std; });

        add_n("sim.id_identities", "enrolled identities (classes PER1..)",
              [](ExperimentConfig& c) -> std::size_t& { return c.sim.id_identities; });
        add_n("sim.ood_identities", "unknown identities used only at test time",
              [](ExperimentConfig& c) -> std::size_t& { return c.sim.ood_identities; });
        add_n("sim.frames_per_identity", "frames simulated per identity",
              [](ExperimentConfig& c) -> std::size_t& { return c.sim.frames_per_identity; });
        add_d("sim.split_train", "fraction of each ID identity's timeline used for training",
              [](ExperimentConfig& c) -> double& { return c.sim.split_train; });
        add_d("sim.split_cal", "fraction held out for threshold calibration",
              [](ExperimentConfig& c) -> double& { return c.sim.split_cal; });
        add_d("sim.split_test", "fraction held out for evaluation",
              [](ExperimentConfig& c) -> double& { return c.sim.split_test; });
        add_n("sim.window_stride", "frame stride between consecutive 8-frame sample windows",
              [](ExperimentConfig& c) -> std::size_t& { return c.sim.window_stride; });

        add_d("dsp.sinc_cutoff", "slow-time low-pass cutoff as a fraction of the rate, (0, 0.5]",
              [](ExperimentConfig& c) -> double& { return c.dsp.sinc_cutoff; });
        add_n("dsp.sinc_taps", "odd tap count of the sinc kernel",
              [](ExperimentConfig& c) -> std::size_t& { return c.dsp.sinc_taps; });

        add_n("model.layer1_channels", "channels of both modality-specific first layers",
              [](ExperimentConfig& c) -> std::size_t& { return c.model.layer1_channels; });
        add_n("model.layer2_channels", "channels of both modality-specific second layers",
              [](ExperimentConfig& c) -> std::size_t& { return c.model.layer2_channels; });
        add_n("model.layer3_channels", "channels of the combined block",
              [](ExperimentConfig& c) -> std::size_t& { return c.model.layer3_channels; });
        add_n("model.embedding_dim", "embedding width produced by layer 4",
              [](ExperimentConfig& c) -> std::size_t& { return c.model.embedding_dim; });
        out->emplace_back(
            "model.ip_bottleneck_dims",
            KeyEntry{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         std::array<std::size_t, kNumIps> dims{};
                         std::stringstream ss(v);
                         std::string item;
                         std::size_t i = 0;
                         while (std::getline(ss, item, ',')) {
                             require(i < kNumIps, ErrorCategory::config,
                                     strfmt("key '%s': expected %zu comma-separated values",
                                            k.c_str(), kNumIps));
                             dims[i++] = parse_count(k, trim(item));
                         }
                         require(i == kNumIps, ErrorCategory::config,
                                 strfmt("key '%s': expected %zu comma-separated values, got %zu",
                                        k.c_str(), kNumIps, i));
                         c.model.ip_bottleneck = dims;
                     },
                     [](const ExperimentConfig& c) {
                         std::string s;
                         for (std::size_t i = 0; i < kNumIps; ++i) {
                             if (i) s += ",";
                             s += std::to_string(c.model.ip_bottleneck[i]);
                         }
                         return s;
                     },
                     "six encoder widths, order rdi1,rdi2,micro1,micro2,comb3,comb4; 0 = auto"});
        add_d("model.margin", "triplet loss margin",
              [](ExperimentConfig& c) -> double& { return c.model.margin; });

        add_n("train.stage1_epochs", "epochs of triplet training for the primary path",
              [](ExperimentConfig& c) -> std::size_t& { return c.train.stage1_epochs; });
        add_n("train.stage2_epochs", "epochs of reconstruction training for the IPs",
              [](ExperimentConfig& c) -> std::size_t& { return c.train.stage2_epochs; });
        add_n("train.batch_size", "triplets (stage 1) or samples (stage 2) per step",
              [](ExperimentConfig& c) -> std::size_t& { return c.train.batch_size; });
        add_d("train.adamax_alpha", "adamax step size",
              [](ExperimentConfig& c) -> double& { return c.train.adamax_alpha; });
        add_d("train.adamax_beta1", "adamax first-moment decay",
              [](ExperimentConfig& c) -> double& { return c.train.adamax_beta1; });
        add_d("train.adamax_beta2", "adamax infinity-norm decay",
              [](ExperimentConfig& c) -> double& { return c.train.adamax_beta2; });
        add_d("train.adamax_epsilon", "adamax denominator guard",
              [](ExperimentConfig& c) -> double& { return c.train.adamax_epsilon; });

        add_d("detect.target_tpr", "fraction of calibration ID samples the threshold must accept",
              [](ExperimentConfig& c) -> double& { return c.detect.target_tpr; });
        add_n("detect.knn_k", "neighbors consulted by the embedding classifier",
              [](ExperimentConfig& c) -> std::size_t& { return c.detect.knn_k; });
        out->emplace_back(
            "detect.score_mode",
            KeyEntry{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         if (v == "normalized") c.detect.score_mode = ScoreMode::normalized;
                         else if (v == "raw") c.detect.score_mode = ScoreMode::raw;
                         else
                             throw FareError(ErrorCategory::config,
                                             strfmt("key '%s': expected 'normalized' or 'raw', got '%s'",
                                                    k.c_str(), v.c_str()));
                     },
                     [](const ExperimentConfig& c) {
                         return std::string(score_mode_name(c.detect.score_mode));
                     },
                     "'normalized' sums per-IP z-scores; 'raw' sums raw reconstruction errors"});
        return out;
    }();
    return *keys;
}

const Registry& registry() {
    static const auto* reg = [] {
        auto* r = new Registry();
        for (const auto& [k, e] : key_list()) (*r)[k] = e;
        return r;
    }();
    return *reg;
}

}  // namespace

const char* score_mode_name(ScoreMode mode) {
    return mode == ScoreMode::normalized ? "normalized" : "raw";
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCategory::config,
                strfmt("line %zu: expected 'key = value'", lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = registry().find(key);
        require(it != registry().end(), ErrorCategory::config,
                strfmt("line %zu: unknown key '%s'", lineno, key.c_str()));
        require(seen.insert(key).second, ErrorCategory::config,
                strfmt("line %zu: duplicate key '%s'", lineno, key.c_str()));
        it->second.set(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (const FareError& e) {
        throw FareError(e.category(), path.string() + ": " + e.what());
    }
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out = "# fare experiment configuration\n";
    std::string group;
    for (const auto& [key, entry] : key_list()) {
        const std::string g = key.substr(0, key.find('.'));
        if (g != group) {
            out += "\n";
            group = g;
        }
        out += strfmt("%s = %s  # %s\n", key.c_str(), entry.get(cfg).c_str(), entry.doc);
    }
    return out;
}

void ExperimentConfig::validate() const {
    radar.validate();
    const double sum = sim.split_train + sim.split_cal + sim.split_test;
    require(std::fabs(sum - 1.0) <= 1e-9, ErrorCategory::config,
            strfmt("split fractions must sum to 1, got %.6f", sum));
    require(sim.split_train >= 0 && sim.split_cal >= 0 && sim.split_test >= 0,
            ErrorCategory::config, "split fractions must be non-negative");
    require(sim.window_stride >= 1, ErrorCategory::config, "window stride must be >= 1");
    require(train.batch_size >= 2, ErrorCategory::config, "batch size must be >= 2");
    require(detect.target_tpr > 0.0 && detect.target_tpr < 1.0, ErrorCategory::config,
            "target TPR must lie in (0, 1)");
    require(detect.knn_k >= 1, ErrorCategory::config, "knn k must be >= 1");
    AdamaxConfig opt{train.adamax_alpha, train.adamax_beta1, train.adamax_beta2,
                     train.adamax_epsilon};
    opt.validate();
    sinc_kernel(dsp.sinc_cutoff, dsp.sinc_taps);  // validates both parameters
    require(model.margin >= 0.0, ErrorCategory::config, "margin must be >= 0");
}

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig mc;
    mc.rdi_rows = radar.range_bins();
    mc.rdi_cols = radar.chirps_per_frame;
    mc.mrdi_rows = radar.range_bins();
    mc.mrdi_cols = 8 * radar.chirps_per_frame;
    mc.layer1_channels = model.layer1_channels;
    mc.layer2_channels = model.layer2_channels;
    mc.layer3_channels = model.layer3_channels;
    mc.embedding_dim = model.embedding_dim;
    mc.ip_bottleneck = model.ip_bottleneck;
    mc.margin = model.margin;
    mc.finalize();
    return mc;
}

}  // namespace fare
