#include "fare/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>

namespace fare {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamModelInit = 9001;

std::string csv_num(double v) { return strfmt("%.6f", v); }

LoadedCheckpoint load_stage(const fs::path& path, const ModelConfig& expected,
                            CheckpointStage required_stage, const char* missing_hint,
                            const char* stage_hint) {
    require(fs::exists(path), ErrorCategory::state,
            "missing " + path.string() + " - run '" + missing_hint + "' first");
    LoadedCheckpoint ckpt = load_checkpoint(path, expected);
    require(ckpt.stage == required_stage, ErrorCategory::state,
            strfmt("checkpoint %s has stage '%s' but stage '%s' is required - run '%s' first",
                   path.string().c_str(), checkpoint_stage_name(ckpt.stage),
                   checkpoint_stage_name(required_stage), stage_hint));
    return ckpt;
}

OodMetricRow ood_metric_row(std::string name, const ScoredPopulations& pops) {
    OodMetricRow row;
    row.name = std::move(name);
    row.auroc = auroc(pops);
    row.aupr_in = aupr(pops, PositiveClass::in_distribution);
    row.aupr_out = aupr(pops, PositiveClass::out_of_distribution);
    row.fpr95 = fpr_at_tpr(pops, 0.95);
    return row;
}

std::vector<double> subset_scores(const std::vector<IpErrors>& errors,
                                  const ScoreNormalizer& norm, ScoreMode mode,
                                  std::uint32_t mask) {
    std::vector<double> out(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) out[i] = ood_score(errors[i], norm, mode, mask);
    return out;
}

}  // namespace

std::array<std::uint32_t, 4> ablation_masks() {
    const std::uint32_t layer1 = (1u << 0) | (1u << 2);
    const std::uint32_t layer2 = (1u << 1) | (1u << 3);
    const std::uint32_t layer3 = 1u << 4;
    const std::uint32_t layer4 = 1u << 5;
    return {layer1, layer1 | layer2, layer1 | layer2 | layer3,
            layer1 | layer2 | layer3 | layer4};
}

ScoredSamples score_samples(const FareModel& model, const SampleSet& data,
                            const std::vector<std::size_t>& indices, std::size_t batch_size) {
    ScoredSamples out;
    out.embedding_dim = model.config().embedding_dim;
    out.embeddings.resize(indices.size() * out.embedding_dim);
    out.errors.resize(indices.size());
    out.class_index.resize(indices.size());
    for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
        const std::size_t end = std::min(indices.size(), begin + batch_size);
        const std::vector<std::size_t> idx(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                                           indices.begin() + static_cast<std::ptrdiff_t>(end));
        const ForwardTrace trace =
            model.pp_forward(make_rdi_batch(data, idx), make_mrdi_batch(data, idx));
        const std::vector<IpErrors> errors = batch_ip_errors(model, trace);
        std::memcpy(out.embeddings.data() + begin * out.embedding_dim,
                    trace.embedding.data().data(),
                    (end - begin) * out.embedding_dim * sizeof(double));
        for (std::size_t i = begin; i < end; ++i) {
            out.errors[i] = errors[i - begin];
            out.class_index[i] = data.records[indices[i]].class_index;
        }
    }
    return out;
}

void cmd_simulate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws,
                  bool force) {
    generate_dataset(ws.dir, cfg, seed, force);
}

void cmd_preprocess(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws) {
    preprocess_dataset(ws.dir, cfg, seed);
}

void cmd_train_pp(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws) {
    const SampleSet data = load_samples(ws.dir);
    FareModel model = FareModel::build(cfg.model_config(), derive_seed(seed, kStreamModelInit));
    const TrainConfig tc = TrainConfig::from(cfg, seed);
    const std::vector<double> losses = train_pp(model, data, tc);

    std::string csv = "epoch,triplet_loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e)
        csv += strfmt("%zu,%s\n", e, csv_num(losses[e]).c_str());
    atomic_write_file(ws.pp_loss_csv(), csv);
    save_checkpoint(ws.checkpoint_pp(), model, CheckpointStage::pp_trained, std::nullopt,
                    std::nullopt);
}

void cmd_train_ip(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws) {
    const SampleSet data = load_samples(ws.dir);
    LoadedCheckpoint ckpt = load_stage(ws.checkpoint_pp(), cfg.model_config(),
                                       CheckpointStage::pp_trained, "train-pp", "train-pp");
    ckpt.model.freeze_pp();
    const TrainConfig tc = TrainConfig::from(cfg, seed);
    const auto histories = train_ips(ckpt.model, data, tc);

    std::string csv = "epoch";
    for (std::size_t ip = 0; ip < kNumIps; ++ip) csv += strfmt(",%s", ip_tap_name(ip));
    csv += "\n";
    const std::size_t epochs = histories[0].size();
    for (std::size_t e = 0; e < epochs; ++e) {
        csv += strfmt("%zu", e);
        for (std::size_t ip = 0; ip < kNumIps; ++ip)
            csv += "," + csv_num(histories[ip][e]);
        csv += "\n";
    }
    atomic_write_file(ws.ip_loss_csv(), csv);
    save_checkpoint(ws.checkpoint_ip(), ckpt.model, CheckpointStage::ip_trained, std::nullopt,
                    std::nullopt);
}

void cmd_calibrate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws) {
    (void)seed;  // calibration is deterministic given the artifacts
    const SampleSet data = load_samples(ws.dir);
    LoadedCheckpoint ckpt = load_stage(ws.checkpoint_ip(), cfg.model_config(),
                                       CheckpointStage::ip_trained, "train-ip", "train-ip");

    const std::vector<std::size_t> cal = data.indices_of(Split::cal, /*id_only=*/true);
    require(cal.size() >= 2, ErrorCategory::data, "calibration split needs at least two samples");
    const ScoredSamples scored = score_samples(ckpt.model, data, cal, cfg.train.batch_size);

    const ScoreNormalizer norm = fit_normalizer(scored.errors);
    for (std::uint32_t ip : norm.degenerate_ips)
        std::fprintf(stderr, "warning: ip %u has constant calibration error, sigma guarded to 1\n",
                     ip);
    const std::vector<double> scores =
        subset_scores(scored.errors, norm, cfg.detect.score_mode, kAllIpsMask);
    const OodThreshold threshold = calibrate_threshold(scores, cfg.detect.target_tpr);
    save_checkpoint(ws.checkpoint_calibrated(), ckpt.model, CheckpointStage::ip_trained, norm,
                    threshold);
}

std::string EvaluationReport::to_csv() const {
    std::string csv = "metric,class,value\n";
    for (const OodMetricRow& row : per_class) {
        csv += "auroc," + row.name + "," + csv_num(row.auroc) + "\n";
        csv += "aupr_in," + row.name + "," + csv_num(row.aupr_in) + "\n";
        csv += "aupr_out," + row.name + "," + csv_num(row.aupr_out) + "\n";
        csv += "fpr95," + row.name + "," + csv_num(row.fpr95) + "\n";
    }
    csv += "auroc,pooled," + csv_num(pooled.auroc) + "\n";
    csv += "aupr_in,pooled," + csv_num(pooled.aupr_in) + "\n";
    csv += "aupr_out,pooled," + csv_num(pooled.aupr_out) + "\n";
    csv += "fpr95,pooled," + csv_num(pooled.fpr95) + "\n";
    csv += "accuracy,all," + csv_num(knn_accuracy) + "\n";
    for (std::size_t t = 0; t < confusion.size(); ++t)
        for (std::size_t p = 0; p < confusion[t].size(); ++p)
            csv += strfmt("confusion,%s:%s,%zu\n", class_labels[t].c_str(),
                          class_labels[p].c_str(), confusion[t][p]);
    return csv;
}

std::string EvaluationReport::to_text() const {
    std::string out = "OOD detection (per ID class vs all OOD samples)\n";
    out += strfmt("%-8s %8s %8s %8s %8s\n", "class", "AUROC", "AUPR_IN", "AUPR_OUT", "FPR95");
    auto line = [&out](const OodMetricRow& r) {
        out += strfmt("%-8s %8.4f %8.4f %8.4f %8.4f\n", r.name.c_str(), r.auroc, r.aupr_in,
                      r.aupr_out, r.fpr95);
    };
    for (const OodMetricRow& r : per_class) line(r);
    line(pooled);
    out += strfmt("\nKNN classification accuracy on ID test samples: %.4f\n", knn_accuracy);
    out += "\nConfusion matrix (rows = true class, cols = predicted)\n";
    out += strfmt("%-8s", "");
    for (const std::string& l : class_labels) out += strfmt("%8s", l.c_str());
    out += "\n";
    for (std::size_t t = 0; t < confusion.size(); ++t) {
        out += strfmt("%-8s", class_labels[t].c_str());
        for (std::size_t p = 0; p < confusion[t].size(); ++p)
            out += strfmt("%8zu", confusion[t][p]);
        out += "\n";
    }
    return out;
}

EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws) {
    (void)seed;
    const SampleSet data = load_samples(ws.dir);
    LoadedCheckpoint ckpt = load_stage(ws.checkpoint_calibrated(), cfg.model_config(),
                                       CheckpointStage::ip_trained, "calibrate", "train-ip");
    require(ckpt.normalizer && ckpt.threshold, ErrorCategory::state,
            "checkpoint lacks calibration records - run 'calibrate' first");

    const std::vector<std::size_t> train_idx = data.indices_of(Split::train, /*id_only=*/true);
    const std::vector<std::size_t> test_id_idx = data.indices_of(Split::test, /*id_only=*/true);
    std::vector<std::size_t> ood_idx;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.records[i].class_index < 0) ood_idx.push_back(i);
    require(!test_id_idx.empty(), ErrorCategory::data, "no ID test samples");
    require(!ood_idx.empty(), ErrorCategory::data, "no OOD samples");

    const ScoredSamples train_s = score_samples(ckpt.model, data, train_idx, cfg.train.batch_size);
    const ScoredSamples test_s = score_samples(ckpt.model, data, test_id_idx, cfg.train.batch_size);
    const ScoredSamples ood_s = score_samples(ckpt.model, data, ood_idx, cfg.train.batch_size);

    const ScoreMode mode = cfg.detect.score_mode;
    const std::vector<double> id_scores =
        subset_scores(test_s.errors, *ckpt.normalizer, mode, kAllIpsMask);
    const std::vector<double> ood_scores =
        subset_scores(ood_s.errors, *ckpt.normalizer, mode, kAllIpsMask);

    EvaluationReport report;
    report.class_labels = data.class_labels;
    for (std::size_t c = 0; c < data.class_labels.size(); ++c) {
        ScoredPopulations pops;
        pops.ood_scores = ood_scores;
        for (std::size_t i = 0; i < test_s.class_index.size(); ++i)
            if (test_s.class_index[i] == static_cast<int>(c)) pops.id_scores.push_back(id_scores[i]);
        require(!pops.id_scores.empty(), ErrorCategory::data,
                "class " + data.class_labels[c] + " has no test samples");
        report.per_class.push_back(ood_metric_row(data.class_labels[c], pops));
    }
    report.pooled = ood_metric_row("pooled", ScoredPopulations{id_scores, ood_scores});

    // KNN accuracy over ID test samples; the OOD gate is assessed by the OOD
    // metrics, so classification quality is reported on the full ID test set.
    const KnnIndex knn = KnnIndex::fit(train_s.embeddings, train_s.embedding_dim,
                                       train_s.class_index, cfg.detect.knn_k);
    std::vector<int> preds(test_id_idx.size());
    const std::ptrdiff_t n_test = static_cast<std::ptrdiff_t>(test_id_idx.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n_test; ++i)
        preds[static_cast<std::size_t>(i)] = knn.predict(test_s.embedding(static_cast<std::size_t>(i)));
    report.knn_accuracy = accuracy(preds, test_s.class_index);
    report.confusion = confusion_matrix(preds, test_s.class_index, data.class_labels.size());

    atomic_write_file(ws.metrics_csv(), report.to_csv());
    atomic_write_file(ws.metrics_txt(), report.to_text());
    return report;
}

std::string AblationReport::to_csv() const {
    std::string csv = "ips_at,auroc,aupr_in,aupr_out,fpr95\n";
    for (const OodMetricRow& r : rows)
        csv += r.name + "," + csv_num(r.auroc) + "," + csv_num(r.aupr_in) + "," +
               csv_num(r.aupr_out) + "," + csv_num(r.fpr95) + "\n";
    return csv;
}

std::string AblationReport::to_text() const {
    std::string out = "OOD detection by IP subset (pooled populations)\n";
    out += strfmt("%-14s %8s %8s %8s %8s\n", "IPs at", "AUROC", "AUPR_IN", "AUPR_OUT", "FPR95");
    for (const OodMetricRow& r : rows)
        out += strfmt("%-14s %8.4f %8.4f %8.4f %8.4f\n", r.name.c_str(), r.auroc, r.aupr_in,
                      r.aupr_out, r.fpr95);
    return out;
}

AblationReport cmd_ablate(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws) {
    (void)seed;
    const SampleSet data = load_samples(ws.dir);
    LoadedCheckpoint ckpt = load_stage(ws.checkpoint_ip(), cfg.model_config(),
                                       CheckpointStage::ip_trained, "train-ip", "train-ip");

    const std::vector<std::size_t> cal_idx = data.indices_of(Split::cal, /*id_only=*/true);
    const std::vector<std::size_t> test_id_idx = data.indices_of(Split::test, /*id_only=*/true);
    std::vector<std::size_t> ood_idx;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.records[i].class_index < 0) ood_idx.push_back(i);
    require(cal_idx.size() >= 2, ErrorCategory::data, "calibration split needs at least two samples");
    require(!test_id_idx.empty() && !ood_idx.empty(), ErrorCategory::data,
            "ablation needs ID test and OOD samples");

    const ScoredSamples cal_s = score_samples(ckpt.model, data, cal_idx, cfg.train.batch_size);
    const ScoredSamples test_s = score_samples(ckpt.model, data, test_id_idx, cfg.train.batch_size);
    const ScoredSamples ood_s = score_samples(ckpt.model, data, ood_idx, cfg.train.batch_size);

    const ScoreNormalizer norm = fit_normalizer(cal_s.errors);
    const ScoreMode mode = cfg.detect.score_mode;
    const std::array<std::uint32_t, 4> masks = ablation_masks();
    const std::array<const char*, 4> names{"layer1", "layer1-2", "layer1-2-3", "layer1-2-3-4"};

    AblationReport report;
    for (std::size_t row = 0; row < masks.size(); ++row) {
        // Threshold recalibrated per subset on the restricted sums; the four
        // reported metrics are threshold-free but tau keeps subsets comparable
        // at the same operating point.
        const std::vector<double> cal_scores = subset_scores(cal_s.errors, norm, mode, masks[row]);
        (void)calibrate_threshold(cal_scores, cfg.detect.target_tpr);
        ScoredPopulations pops;
        pops.id_scores = subset_scores(test_s.errors, norm, mode, masks[row]);
        pops.ood_scores = subset_scores(ood_s.errors, norm, mode, masks[row]);
        report.rows.push_back(ood_metric_row(names[row], pops));
    }

    atomic_write_file(ws.ablation_csv(), report.to_csv());
    atomic_write_file(ws.ablation_txt(), report.to_text());
    return report;
}

Decision cmd_predict(const ExperimentConfig& cfg, std::uint64_t seed, const Workspace& ws,
                     const fs::path& input_container) {
    (void)seed;
    const SampleSet data = load_samples(ws.dir);
    LoadedCheckpoint ckpt = load_stage(ws.checkpoint_calibrated(), cfg.model_config(),
                                       CheckpointStage::ip_trained, "calibrate", "train-ip");
    require(ckpt.normalizer && ckpt.threshold, ErrorCategory::state,
            "checkpoint lacks calibration records - run 'calibrate' first");

    require(fs::exists(input_container), ErrorCategory::io,
            "input container not found: " + input_container.string());
    const ContainerArray raw = read_container(input_container);
    require(raw.dtype == Dtype::c64 && raw.dims.size() == 4, ErrorCategory::format,
            "predict expects a complex64 container shaped [frames][rx][chirps][samples]");
    require(raw.dims[1] == cfg.radar.num_rx && raw.dims[2] == cfg.radar.chirps_per_frame &&
                raw.dims[3] == cfg.radar.samples_per_chirp,
            ErrorCategory::data, "input container shape does not match the radar configuration");
    require(raw.dims[0] >= Preprocessor::kStackedFrames, ErrorCategory::data,
            strfmt("predict needs at least %zu frames, got %u", Preprocessor::kStackedFrames,
                   raw.dims[0]));

    const std::vector<std::complex<double>> slab = raw.to_complex();
    const std::size_t per_frame =
        cfg.radar.num_rx * cfg.radar.chirps_per_frame * cfg.radar.samples_per_chirp;
    std::vector<RawFrame> frames;
    for (std::size_t f = 0; f < Preprocessor::kStackedFrames; ++f) {
        RawFrame frame;
        frame.num_rx = cfg.radar.num_rx;
        frame.chirps = cfg.radar.chirps_per_frame;
        frame.samples = cfg.radar.samples_per_chirp;
        frame.frame_index = f;
        frame.data.assign(slab.begin() + static_cast<std::ptrdiff_t>(f * per_frame),
                          slab.begin() + static_cast<std::ptrdiff_t>((f + 1) * per_frame));
        frames.push_back(std::move(frame));
    }

    Preprocessor pre;
    pre.radar = cfg.radar;
    pre.sinc_cutoff = cfg.dsp.sinc_cutoff;
    pre.sinc_taps = cfg.dsp.sinc_taps;
    const RangeDopplerImage rdi = pre.build_rdi(frames.back());
    const MicroRangeDopplerImage mrdi = pre.build_micro_rdi(std::span<const RawFrame>(frames));

    const std::vector<std::size_t> train_idx = data.indices_of(Split::train, /*id_only=*/true);
    const ScoredSamples train_s = score_samples(ckpt.model, data, train_idx, cfg.train.batch_size);
    const KnnIndex knn = KnnIndex::fit(train_s.embeddings, train_s.embedding_dim,
                                       train_s.class_index, cfg.detect.knn_k);

    Tensor rdi_t = Tensor::from_data({1, 1, rdi.rows, rdi.cols}, rdi.values);
    Tensor mrdi_t = Tensor::from_data({1, 1, mrdi.rows, mrdi.cols}, mrdi.values);
    const Decision decision = infer(ckpt.model, *ckpt.normalizer, *ckpt.threshold, knn,
                                    cfg.detect.score_mode, rdi_t, mrdi_t, data.class_labels);

    nlohmann::json j;
    j["verdict"] = decision.is_ood ? "OOD" : "ID";
    j["class"] = decision.is_ood ? "" : decision.class_label;
    j["score"] = decision.score;
    j["threshold"] = ckpt.threshold->tau;
    j["embedding"] = decision.embedding;
    atomic_write_file(ws.dir / "decision.json", j.dump(2) + "\n");
    return decision;
}

}  // namespace fare
