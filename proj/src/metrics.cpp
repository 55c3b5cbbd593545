#include "fare/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace fare {

void ScoredPopulations::validate() const {
    require(!id_scores.empty() && !ood_scores.empty(), ErrorCategory::data,
            "both score populations must be nonempty");
    require(all_finite(id_scores) && all_finite(ood_scores), ErrorCategory::data,
            "scores must be finite");
}

double auroc(const ScoredPopulations& pops) {
    pops.validate();
    std::vector<double> id_sorted = pops.id_scores;
    std::sort(id_sorted.begin(), id_sorted.end());
    unsigned long long wins = 0, ties = 0;
    for (double s : pops.ood_scores) {
        const auto lo = std::lower_bound(id_sorted.begin(), id_sorted.end(), s);
        const auto hi = std::upper_bound(lo, id_sorted.end(), s);
        wins += static_cast<unsigned long long>(lo - id_sorted.begin());
        ties += static_cast<unsigned long long>(hi - lo);
    }
    const auto n = static_cast<double>(pops.id_scores.size());
    const auto m = static_cast<double>(pops.ood_scores.size());
    return (2.0 * static_cast<double>(wins) + static_cast<double>(ties)) / (2.0 * n * m);
}

double aupr(const ScoredPopulations& pops, PositiveClass positive) {
    pops.validate();
    // Order all samples from most to least "positive-looking": descending
    // score when OOD is positive, ascending when ID is positive.
    struct Entry {
        double score;
        bool is_positive;
    };
    std::vector<Entry> entries;
    entries.reserve(pops.id_scores.size() + pops.ood_scores.size());
    const bool ood_positive = positive == PositiveClass::out_of_distribution;
    for (double s : pops.id_scores) entries.push_back({ood_positive ? s : -s, !ood_positive});
    for (double s : pops.ood_scores) entries.push_back({ood_positive ? s : -s, ood_positive});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score > b.score; });

    const unsigned long long total_pos =
        ood_positive ? pops.ood_scores.size() : pops.id_scores.size();
    unsigned long long tp = 0, fp = 0, tp_prev = 0;
    double area = 0.0;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].score == entries[i].score) {
            if (entries[j].is_positive) ++tp; else ++fp;
            ++j;
        }
        if (tp != tp_prev) {
            area += static_cast<double>(tp - tp_prev) / static_cast<double>(total_pos) *
                    (static_cast<double>(tp) / static_cast<double>(tp + fp));
            tp_prev = tp;
        }
        i = j;
    }
    return area;
}

double fpr_at_tpr(const ScoredPopulations& pops, double target_tpr) {
    pops.validate();
    require(target_tpr > 0.0 && target_tpr <= 1.0, ErrorCategory::config,
            "target TPR must lie in (0, 1]");
    std::vector<double> ood_sorted = pops.ood_scores;
    std::sort(ood_sorted.begin(), ood_sorted.end(), std::greater<>());
    const std::size_t m = ood_sorted.size();

    double threshold = ood_sorted.back();  // fallback: admit every OOD sample
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j < m && ood_sorted[j] == ood_sorted[i]) ++j;
        // j = count of OOD scores >= this value
        if (static_cast<double>(j) / static_cast<double>(m) >= target_tpr) {
            threshold = ood_sorted[i];
            break;
        }
        i = j;
    }

    unsigned long long false_pos = 0;
    for (double s : pops.id_scores)
        if (s >= threshold) ++false_pos;
    return static_cast<double>(false_pos) / static_cast<double>(pops.id_scores.size());
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    require(predictions.size() == labels.size(), ErrorCategory::data,
            "prediction/label length mismatch");
    require(!labels.empty(), ErrorCategory::data, "empty label list");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (predictions[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& predictions,
                                                       const std::vector<int>& labels,
                                                       std::size_t num_classes) {
    require(predictions.size() == labels.size(), ErrorCategory::data,
            "prediction/label length mismatch");
    std::vector<std::vector<std::size_t>> matrix(num_classes,
                                                 std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < num_classes,
                ErrorCategory::data, strfmt("label %d outside the class list", labels[i]));
        require(predictions[i] >= 0 && static_cast<std::size_t>(predictions[i]) < num_classes,
                ErrorCategory::data, strfmt("prediction %d outside the class list", predictions[i]));
        ++matrix[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
    }
    return matrix;
}

}  // namespace fare
