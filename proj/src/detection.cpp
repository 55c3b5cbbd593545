#include "fare/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fare {

std::vector<IpErrors> batch_ip_errors(const FareModel& model, const ForwardTrace& trace) {
    const std::size_t batch = trace.embedding.dim(0);
    std::vector<IpErrors> out(batch);
    for (std::size_t ip = 0; ip < kNumIps; ++ip) {
        const Tensor& feature = trace.intermediates[ip];
        const std::size_t len = feature.numel() / batch;
        Tensor flat = Tensor::from_data({batch, len}, feature.data());
        const Tensor recon = model.ip_reconstruct(ip, flat);
        const double* x = flat.data().data();
        const double* r = recon.data().data();
        for (std::size_t b = 0; b < batch; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < len; ++j) acc += std::fabs(x[b * len + j] - r[b * len + j]);
            out[b][ip] = acc / static_cast<double>(len);
        }
    }
    return out;
}

ScoreNormalizer fit_normalizer(const std::vector<IpErrors>& calibration_errors) {
    require(calibration_errors.size() >= 2, ErrorCategory::data,
            "normalizer needs at least two calibration samples");
    const double n = static_cast<double>(calibration_errors.size());
    ScoreNormalizer norm;
    for (std::size_t ip = 0; ip < kNumIps; ++ip) {
        double mean = 0.0;
        for (const IpErrors& e : calibration_errors) mean += e[ip];
        mean /= n;
        double var = 0.0;
        for (const IpErrors& e : calibration_errors) var += (e[ip] - mean) * (e[ip] - mean);
        var /= n;  // population variance
        norm.mu[ip] = mean;
        norm.sigma[ip] = std::sqrt(var);
        if (norm.sigma[ip] == 0.0) {
            norm.sigma[ip] = 1.0;
            norm.degenerate_ips.push_back(static_cast<std::uint32_t>(ip));
        }
    }
    return norm;
}

double ood_score(const IpErrors& errors, const ScoreNormalizer& normalizer, ScoreMode mode,
                 std::uint32_t ip_mask) {
    double score = 0.0;
    for (std::size_t ip = 0; ip < kNumIps; ++ip) {
        if (!(ip_mask & (1u << ip))) continue;
        score += mode == ScoreMode::normalized
                     ? (errors[ip] - normalizer.mu[ip]) / normalizer.sigma[ip]
                     : errors[ip];
    }
    return score;
}

OodThreshold calibrate_threshold(std::vector<double> id_scores, double target_tpr) {
    require(!id_scores.empty(), ErrorCategory::data, "cannot calibrate on an empty score set");
    require(target_tpr > 0.0 && target_tpr < 1.0, ErrorCategory::config,
            "target TPR must lie in (0, 1)");
    const std::size_t n = id_scores.size();
    std::sort(id_scores.begin(), id_scores.end());
    const auto k = static_cast<std::size_t>(
        std::ceil(target_tpr * static_cast<double>(n)));  // 1-indexed order statistic
    OodThreshold out;
    out.tau = id_scores[std::max<std::size_t>(k, 1) - 1];
    out.target_tpr = target_tpr;
    out.calibration_size = n;
    return out;
}

KnnIndex KnnIndex::fit(std::vector<double> embeddings, std::size_t dim, std::vector<int> labels,
                       std::size_t k) {
    require(!labels.empty(), ErrorCategory::data, "knn index cannot be empty");
    require(dim > 0 && embeddings.size() == labels.size() * dim, ErrorCategory::data,
            "knn embedding matrix does not match the label count");
    require(k >= 1 && k <= labels.size(), ErrorCategory::data,
            strfmt("k = %zu must lie in [1, %zu]", k, labels.size()));
    for (int l : labels)
        require(l >= 0, ErrorCategory::data, "knn labels must be non-negative class indices");
    KnnIndex index;
    index.embeddings_ = std::move(embeddings);
    index.labels_ = std::move(labels);
    index.dim_ = dim;
    index.k_ = k;
    return index;
}

int KnnIndex::predict(std::span<const double> query) const {
    require(query.size() == dim_, ErrorCategory::data, "knn query dimension mismatch");
    const std::size_t n = labels_.size();
    std::vector<std::pair<double, std::size_t>> dist(n);  // (squared distance, index)
    for (std::size_t i = 0; i < n; ++i) {
        const double* e = embeddings_.data() + i * dim_;
        double acc = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            const double d = e[j] - query[j];
            acc += d * d;
        }
        dist[i] = {acc, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());

    int max_label = 0;
    for (std::size_t i = 0; i < k_; ++i) max_label = std::max(max_label, labels_[dist[i].second]);
    std::vector<std::size_t> votes(static_cast<std::size_t>(max_label) + 1, 0);
    std::vector<double> dist_sum(static_cast<std::size_t>(max_label) + 1, 0.0);
    for (std::size_t i = 0; i < k_; ++i) {
        const auto label = static_cast<std::size_t>(labels_[dist[i].second]);
        ++votes[label];
        dist_sum[label] += std::sqrt(dist[i].first);
    }

    int best = -1;
    std::size_t best_votes = 0;
    double best_mean = 0.0;
    for (std::size_t label = 0; label < votes.size(); ++label) {
        if (votes[label] == 0) continue;
        const double mean = dist_sum[label] / static_cast<double>(votes[label]);
        const bool wins = votes[label] > best_votes ||
                          (votes[label] == best_votes && mean < best_mean);
        // equal votes and equal mean distance keep the lower class index
        if (best < 0 || wins) {
            best = static_cast<int>(label);
            best_votes = votes[label];
            best_mean = mean;
        }
    }
    return best;
}

Decision infer(const FareModel& model, const ScoreNormalizer& normalizer,
               const OodThreshold& threshold, const KnnIndex& knn, ScoreMode mode,
               const Tensor& rdi, const Tensor& micro_rdi,
               const std::vector<std::string>& class_labels) {
    const ForwardTrace trace = model.pp_forward(rdi, micro_rdi);
    require(trace.embedding.dim(0) == 1, ErrorCategory::data, "infer expects a single sample");
    const std::vector<IpErrors> errors = batch_ip_errors(model, trace);

    Decision decision;
    decision.embedding = trace.embedding.data();
    decision.score = ood_score(errors[0], normalizer, mode);
    if (decision.score > threshold.tau) {
        decision.is_ood = true;
        return decision;
    }
    decision.class_index = knn.predict(decision.embedding);
    if (decision.class_index >= 0 &&
        static_cast<std::size_t>(decision.class_index) < class_labels.size())
        decision.class_label = class_labels[static_cast<std::size_t>(decision.class_index)];
    return decision;
}

}  // namespace fare
