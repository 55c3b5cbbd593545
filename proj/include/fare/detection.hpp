#pragma once

#include <optional>

#include "fare/dataset.hpp"
#include "fare/model.hpp"

namespace fare {

// Per-IP reconstruction-error statistics over held-out ID calibration data.
struct ScoreNormalizer {
    std::array<double, kNumIps> mu{};
    std::array<double, kNumIps> sigma{};
    std::vector<std::uint32_t> degenerate_ips;  // sigma guarded to 1
};

struct OodThreshold {
    double tau = 0.0;
    double target_tpr = 0.95;
    std::size_t calibration_size = 0;
};

struct Decision {
    bool is_ood = false;
    int class_index = -1;        // valid only when !is_ood
    std::string class_label;     // empty for OOD
    double score = 0.0;
    std::vector<double> embedding;
};

using IpErrors = std::array<double, kNumIps>;

// Per-sample MAE reconstruction errors of all six IPs for a batch.
std::vector<IpErrors> batch_ip_errors(const FareModel& model, const ForwardTrace& trace);

// Population mean/std per IP; zero std is replaced by 1 and recorded.
ScoreNormalizer fit_normalizer(const std::vector<IpErrors>& calibration_errors);

constexpr std::uint32_t kAllIpsMask = 0x3f;

// Sum of (optionally z-normalized) IP errors over the selected subset.
// Higher means more OOD-like.
double ood_score(const IpErrors& errors, const ScoreNormalizer& normalizer, ScoreMode mode,
                 std::uint32_t ip_mask = kAllIpsMask);

// tau = ceil(target_tpr * n)-th smallest calibration score, so at least
// target_tpr of the calibration IDs satisfy score <= tau.
OodThreshold calibrate_threshold(std::vector<double> id_scores, double target_tpr);

// Exact Euclidean k-nearest-neighbors with majority vote; ties broken by the
// smaller mean neighbor distance, then the lower class index.
class KnnIndex {
public:
    static KnnIndex fit(std::vector<double> embeddings, std::size_t dim, std::vector<int> labels,
                        std::size_t k);

    int predict(std::span<const double> query) const;

    std::size_t size() const { return labels_.size(); }
    std::size_t k() const { return k_; }
    std::size_t dim() const { return dim_; }

private:
    std::vector<double> embeddings_;  // [n x dim]
    std::vector<int> labels_;
    std::size_t dim_ = 0;
    std::size_t k_ = 0;
};

// Full gate: score > tau rejects as OOD, otherwise KNN assigns the ID class.
Decision infer(const FareModel& model, const ScoreNormalizer& normalizer,
               const OodThreshold& threshold, const KnnIndex& knn, ScoreMode mode,
               const Tensor& rdi, const Tensor& micro_rdi,
               const std::vector<std::string>& class_labels);

}  // namespace fare
