#pragma once

#include "fare/adamax.hpp"
#include "fare/dataset.hpp"
#include "fare/model.hpp"

namespace fare {

struct TrainConfig {
    std::size_t stage1_epochs = 30;
    std::size_t stage2_epochs = 20;
    std::size_t batch_size = 32;
    AdamaxConfig adamax;
    double margin = 2.0;
    std::uint64_t seed = 1;

    static TrainConfig from(const ExperimentConfig& cfg, std::uint64_t seed);
};

struct TripletIndices {
    std::vector<std::size_t> anchor;
    std::vector<std::size_t> positive;
    std::vector<std::size_t> negative;
};

// Uniform triplet sampling over a labeled pool: anchor uniform over samples,
// positive uniform over the anchor's class minus the anchor, negative uniform
// over all samples of other classes.
TripletIndices sample_triplets(const std::vector<int>& labels, std::size_t batch_size, Rng& rng);

// Stage 1: triplet loss over the embedding, Adamax on PP parameters only.
// Returns the mean batch loss per epoch.
std::vector<double> train_pp(FareModel& model, const SampleSet& data, const TrainConfig& cfg);

// Stage 2: requires a frozen PP; trains the six IPs independently with MAE
// reconstruction losses. Returns one loss curve per IP.
std::array<std::vector<double>, kNumIps> train_ips(FareModel& model, const SampleSet& data,
                                                   const TrainConfig& cfg);

// Batch assembly helpers shared with evaluation.
Tensor make_rdi_batch(const SampleSet& data, std::span<const std::size_t> idx);
Tensor make_mrdi_batch(const SampleSet& data, std::span<const std::size_t> idx);

}  // namespace fare
