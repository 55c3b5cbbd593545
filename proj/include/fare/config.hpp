#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "fare/model.hpp"
#include "fare/radar.hpp"

namespace fare {

enum class ScoreMode { normalized, raw };

struct SimConfig {
    std::size_t id_identities = 5;
    std::size_t ood_identities = 11;
    std::size_t frames_per_identity = 200;
    double split_train = 0.6;
    double split_cal = 0.2;
    double split_test = 0.2;
    std::size_t window_stride = 2;  // start offset between consecutive 8-frame windows
};

struct DspConfig {
    double sinc_cutoff = 0.25;
    std::size_t sinc_taps = 9;
};

struct ModelKnobs {
    std::size_t layer1_channels = 8;
    std::size_t layer2_channels = 16;
    std::size_t layer3_channels = 32;
    std::size_t embedding_dim = 64;
    std::array<std::size_t, kNumIps> ip_bottleneck{0, 0, 0, 0, 0, 0};  // 0 = default rule
    double margin = 2.0;
};

struct TrainKnobs {
    std::size_t stage1_epochs = 30;
    std::size_t stage2_epochs = 20;
    std::size_t batch_size = 32;
    double adamax_alpha = 0.002;
    double adamax_beta1 = 0.9;
    double adamax_beta2 = 0.999;
    double adamax_epsilon = 1e-8;
};

struct DetectConfig {
    double target_tpr = 0.95;
    std::size_t knn_k = 5;
    ScoreMode score_mode = ScoreMode::normalized;
};

// One flat key = value file, '#' comments, grouped by dotted prefixes.
// Unknown keys are errors; missing keys keep their defaults.
struct ExperimentConfig {
    RadarConfig radar;
    SimConfig sim;
    DspConfig dsp;
    ModelKnobs model;
    TrainKnobs train;
    DetectConfig detect;

    void validate() const;

    // Derives the network geometry from the radar configuration.
    ModelConfig model_config() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key written explicitly with its current value, documentation comments
// included. serialize(defaults) is the reference default configuration.
std::string serialize_config(const ExperimentConfig& cfg);

const char* score_mode_name(ScoreMode mode);

}  // namespace fare
