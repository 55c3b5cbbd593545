#include "fare/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

namespace fare {

namespace {

constexpr std::uint64_t kStreamTriplets = 4100;
constexpr std::uint64_t kStreamIpShuffle = 4200;

std::vector<std::size_t> batch_slice(const std::vector<std::size_t>& order, std::size_t begin,
                                     std::size_t end) {
    return {order.begin() + static_cast<std::ptrdiff_t>(begin),
            order.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace

TrainConfig TrainConfig::from(const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainConfig t;
    t.stage1_epochs = cfg.train.stage1_epochs;
    t.stage2_epochs = cfg.train.stage2_epochs;
    t.batch_size = cfg.train.batch_size;
    t.adamax = AdamaxConfig{cfg.train.adamax_alpha, cfg.train.adamax_beta1, cfg.train.adamax_beta2,
                            cfg.train.adamax_epsilon};
    t.margin = cfg.model.margin;
    t.seed = seed;
    return t;
}

TripletIndices sample_triplets(const std::vector<int>& labels, std::size_t batch_size, Rng& rng) {
    require(!labels.empty(), ErrorCategory::data, "triplet sampling over an empty pool");

    int max_label = 0;
    for (int l : labels) {
        require(l >= 0, ErrorCategory::data, "triplet sampling requires ID class labels");
        max_label = std::max(max_label, l);
    }
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    std::size_t populated = 0;
    for (const auto& members : by_class)
        if (!members.empty()) ++populated;
    require(populated >= 2, ErrorCategory::data,
            strfmt("triplet sampling needs at least 2 classes, found %zu", populated));

    TripletIndices out;
    out.anchor.reserve(batch_size);
    out.positive.reserve(batch_size);
    out.negative.reserve(batch_size);
    for (std::size_t t = 0; t < batch_size; ++t) {
        const std::size_t a = rng.index(labels.size());
        const auto& cls = by_class[static_cast<std::size_t>(labels[a])];
        require(cls.size() >= 2, ErrorCategory::data,
                strfmt("class %d has a single sample and cannot anchor a triplet", labels[a]));
        std::size_t p = a;
        while (p == a) p = cls[rng.index(cls.size())];
        std::size_t n = a;
        while (labels[n] == labels[a]) n = rng.index(labels.size());
        out.anchor.push_back(a);
        out.positive.push_back(p);
        out.negative.push_back(n);
    }
    return out;
}

Tensor make_rdi_batch(const SampleSet& data, std::span<const std::size_t> idx) {
    const std::size_t len = data.rdi_rows * data.rdi_cols;
    std::vector<double> buf(idx.size() * len);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::memcpy(buf.data() + i * len, data.rdi[idx[i]].data(), len * sizeof(double));
    return Tensor::from_data({idx.size(), 1, data.rdi_rows, data.rdi_cols}, std::move(buf));
}

Tensor make_mrdi_batch(const SampleSet& data, std::span<const std::size_t> idx) {
    const std::size_t len = data.mrdi_rows * data.mrdi_cols;
    std::vector<double> buf(idx.size() * len);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::memcpy(buf.data() + i * len, data.mrdi[idx[i]].data(), len * sizeof(double));
    return Tensor::from_data({idx.size(), 1, data.mrdi_rows, data.mrdi_cols}, std::move(buf));
}

std::vector<double> train_pp(FareModel& model, const SampleSet& data, const TrainConfig& cfg) {
    require(!model.frozen_pp(), ErrorCategory::state, "stage 1 requires an unfrozen primary path");
    require(cfg.batch_size >= 2, ErrorCategory::config, "batch size must be >= 2");

    const std::vector<std::size_t> pool = data.indices_of(Split::train, /*id_only=*/true);
    require(!pool.empty(), ErrorCategory::data, "training split is empty");
    std::vector<int> labels(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) labels[i] = data.records[pool[i]].class_index;

    std::vector<Tensor> params = model.pp_parameters();
    Adamax optimizer(cfg.adamax, params);
    Rng rng(derive_seed(cfg.seed, kStreamTriplets));

    const std::size_t batches = (pool.size() + cfg.batch_size - 1) / cfg.batch_size;
    std::vector<double> history;
    history.reserve(cfg.stage1_epochs);
    for (std::size_t epoch = 0; epoch < cfg.stage1_epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t batch = 0; batch < batches; ++batch) {
            const TripletIndices trip = sample_triplets(labels, cfg.batch_size, rng);
            auto to_samples = [&pool](const std::vector<std::size_t>& v) {
                std::vector<std::size_t> out(v.size());
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = pool[v[i]];
                return out;
            };
            const auto a_idx = to_samples(trip.anchor);
            const auto p_idx = to_samples(trip.positive);
            const auto n_idx = to_samples(trip.negative);

            const ForwardTrace a = model.pp_forward(make_rdi_batch(data, a_idx),
                                                    make_mrdi_batch(data, a_idx));
            const ForwardTrace p = model.pp_forward(make_rdi_batch(data, p_idx),
                                                    make_mrdi_batch(data, p_idx));
            const ForwardTrace n = model.pp_forward(make_rdi_batch(data, n_idx),
                                                    make_mrdi_batch(data, n_idx));
            Tensor loss = ops::triplet_loss(a.embedding, p.embedding, n.embedding, cfg.margin);
            require(std::isfinite(loss.value()), ErrorCategory::numeric,
                    strfmt("non-finite triplet loss at epoch %zu batch %zu", epoch, batch));

            for (Tensor& t : params) t.zero_grad();
            loss.backward();
            optimizer.step();
            epoch_loss += loss.value();
        }
        history.push_back(epoch_loss / static_cast<double>(batches));
    }
    return history;
}

std::array<std::vector<double>, kNumIps> train_ips(FareModel& model, const SampleSet& data,
                                                   const TrainConfig& cfg) {
    require(model.frozen_pp(), ErrorCategory::state,
            "stage 2 requires freeze_pp before training the IPs");

    const std::vector<std::size_t> pool = data.indices_of(Split::train, /*id_only=*/true);
    require(!pool.empty(), ErrorCategory::data, "training split is empty");
    const std::size_t n = pool.size();

    // The PP is frozen, so per-sample features are constants; compute them
    // once instead of re-running the extractor every epoch.
    const ModelConfig::Shapes shapes = model.config().shapes();
    std::array<std::vector<double>, kNumIps> features;
    for (std::size_t ip = 0; ip < kNumIps; ++ip) features[ip].resize(n * shapes.ip_input[ip]);
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
        const std::size_t end = std::min(n, begin + cfg.batch_size);
        std::vector<std::size_t> idx(pool.begin() + static_cast<std::ptrdiff_t>(begin),
                                     pool.begin() + static_cast<std::ptrdiff_t>(end));
        const ForwardTrace trace =
            model.pp_forward(make_rdi_batch(data, idx), make_mrdi_batch(data, idx));
        for (std::size_t ip = 0; ip < kNumIps; ++ip) {
            const std::size_t len = shapes.ip_input[ip];
            const std::vector<double>& src = trace.intermediates[ip].data();
            std::memcpy(features[ip].data() + begin * len, src.data(),
                        (end - begin) * len * sizeof(double));
        }
    }

    std::array<std::vector<double>, kNumIps> history;
    if (cfg.stage2_epochs == 0) return history;

    std::vector<std::unique_ptr<Adamax>> optimizers;
    for (std::size_t ip = 0; ip < kNumIps; ++ip)
        optimizers.push_back(std::make_unique<Adamax>(cfg.adamax, model.ip_parameters(ip)));

    Rng rng(derive_seed(cfg.seed, kStreamIpShuffle));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    for (std::size_t epoch = 0; epoch < cfg.stage2_epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        std::array<double, kNumIps> epoch_loss{};
        for (std::size_t batch = 0; batch < batches; ++batch) {
            const std::size_t begin = batch * cfg.batch_size;
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            const std::vector<std::size_t> rows = batch_slice(order, begin, end);
            for (std::size_t ip = 0; ip < kNumIps; ++ip) {
                const std::size_t len = shapes.ip_input[ip];
                std::vector<double> buf(rows.size() * len);
                for (std::size_t r = 0; r < rows.size(); ++r)
                    std::memcpy(buf.data() + r * len, features[ip].data() + rows[r] * len,
                                len * sizeof(double));
                Tensor feature = Tensor::from_data({rows.size(), len}, std::move(buf));
                Tensor recon = model.ip_reconstruct(ip, feature);
                Tensor loss = ops::mae_loss(feature, recon);
                require(std::isfinite(loss.value()), ErrorCategory::numeric,
                        strfmt("non-finite loss for ip %zu at epoch %zu batch %zu", ip, epoch,
                               batch));
                for (Tensor& t : model.ip_parameters(ip)) t.zero_grad();
                loss.backward();
                optimizers[ip]->step();
                epoch_loss[ip] += loss.value();
            }
        }
        for (std::size_t ip = 0; ip < kNumIps; ++ip)
            history[ip].push_back(epoch_loss[ip] / static_cast<double>(batches));
    }
    return history;
}

}  // namespace fare
