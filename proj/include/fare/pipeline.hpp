#pragma once

#include "fare/checkpoint.hpp"
#include "fare/metrics.hpp"
#include "fare/training.hpp"

namespace fare {

// Workspace layout shared by all commands; every stage reads the previous
// stage's artifacts from the same directory.
struct Workspace {
    std::filesystem::path dir;

    std::filesystem::path manifest() const { return dir / "manifest.json"; }
    std::filesystem::path preprocessed() const { return dir / "preprocessed.json"; }
    std::filesystem::path checkpoint_pp() const { return dir / "checkpoint_pp.farc"; }
    std::filesystem::path checkpoint_ip() const { return dir / "checkpoint_ip.farc"; }
    std::filesystem::path checkpoint_calibrated() const {
        return dir / "checkpoint_calibrated.farc";
    }
    std::filesystem::path pp_loss_csv() const { return dir / "train_pp_loss.csv"; }
    std::filesystem::path ip_loss_csv() const { return dir / "train_ip_loss.csv"; }
    std::filesystem::path metrics_csv() const { return dir / "metrics.csv"; }
    std::filesystem::path metrics_txt() const { return dir / "metrics.txt"; }
    std::filesystem::path ablation_csv() const { return dir / "ablation.csv"; }
    std::filesystem::path ablation_txt() const { return dir / "ablation.txt"; }
};

struct OodMetricRow {
    std::string name;
    double auroc = 0.0;
    double aupr_in = 0.0;
    double aupr_out = 0.0;
    double fpr95 = 0.0;
};

struct EvaluationReport {
    std::vector<std::string> class_labels;
    std::vector<OodMetricRow> per_class;
    OodMetricRow pooled;
    double knn_accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;

    std::string to_csv() const;
    std::string to_text() const;
};

struct AblationReport {
    std::vector<OodMetricRow> rows;  // Layer 1, 1-2, 1-2-3, 1-2-3-4

    std::string to_csv() const;
    std::string to_text() const;
};

// Embeddings and IP errors for a set of samples, computed in batches on a
// frozen model.
struct ScoredSamples {
    std::size_t embedding_dim = 0;
    std::vector<double> embeddings;  // [n x dim]
    std::vector<IpErrors> errors;
    std::vector<int> class_index;

    std::span<const double> embedding(std::size_t i) const {
        return {embeddings.data() + i * embedding_dim, embedding_dim};
    }
};

ScoredSamples score_samples(const FareModel& model, const SampleSet& data,
                            const std::vector<std::size_t>& indices, std::size_t batch_size);

// Command bodies, shared by the CLI and the acceptance suite.
void cmd_simulate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws, bool force);
void cmd_preprocess(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws);
void cmd_train_pp(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws);
void cmd_train_ip(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws);
void cmd_calibrate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws);
EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws);
AblationReport cmd_ablate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws);
Decision cmd_predict(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws,
                     const std::filesystem::path& input_container);

// The nested IP subsets of the ablation: layer 1 holds the two first-layer
// IPs, layer 2 the two second-layer ones, layers 3 and 4 one each.
std::array<std::uint32_t, 4> ablation_masks();

}  // namespace fare
