#pragma once

#include <cstddef>
#include <vector>

#include "fare/common.hpp"

namespace fare {

// Scores with the convention "higher = more OOD-like".
struct ScoredPopulations {
    std::vector<double> id_scores;
    std::vector<double> ood_scores;

    void validate() const;
};

// Rank formulation: P(ood > id) + 0.5 * P(ood == id) over all pairs, with OOD
// as the positive class.
double auroc(const ScoredPopulations& pops);

enum class PositiveClass { in_distribution, out_of_distribution };

// Area under the precision-recall curve by step summation over the achieved
// recall levels. For the IN case lower scores are more positive.
double aupr(const ScoredPopulations& pops, PositiveClass positive);

// FPR at the loosest threshold reaching TPR >= target with OOD positive:
// the largest score s with frac(ood >= s) >= target; returns frac(id >= s).
double fpr_at_tpr(const ScoredPopulations& pops, double target_tpr);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// rows = true class, cols = predicted class.
std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& predictions,
                                                       const std::vector<int>& labels,
                                                       std::size_t num_classes);

}  // namespace fare
