#include "fare/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fare/container.hpp"

namespace fare {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamIdentitySim = 7001;
constexpr std::size_t kWindow = Preprocessor::kStackedFrames;

std::string identity_label(int idx, std::size_t num_id) {
    if (idx < static_cast<int>(num_id)) return strfmt("PER%d", idx + 1);
    return strfmt("OOD%02d", idx - static_cast<int>(num_id) + 1);
}

json radar_to_json(const RadarConfig& r) {
    return json{{"carrier_freq_hz", r.carrier_freq_hz},
                {"bandwidth_hz", r.bandwidth_hz},
                {"samples_per_chirp", r.samples_per_chirp},
                {"chirps_per_frame", r.chirps_per_frame},
                {"chirp_duration_s", r.chirp_duration_s},
                {"frame_period_s", r.frame_period_s},
                {"adc_rate_hz", r.adc_rate_hz},
                {"num_rx", r.num_rx},
                {"noise_std", r.noise_std}};
}

RadarConfig radar_from_json(const json& j) {
    RadarConfig r;
    r.carrier_freq_hz = j.at("carrier_freq_hz").get<double>();
    r.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    r.samples_per_chirp = j.at("samples_per_chirp").get<std::size_t>();
    r.chirps_per_frame = j.at("chirps_per_frame").get<std::size_t>();
    r.chirp_duration_s = j.at("chirp_duration_s").get<double>();
    r.frame_period_s = j.at("frame_period_s").get<double>();
    r.adc_rate_hz = j.at("adc_rate_hz").get<double>();
    r.num_rx = j.at("num_rx").get<std::size_t>();
    r.noise_std = j.at("noise_std").get<double>();
    return r;
}

std::vector<std::size_t> window_starts(const std::array<std::size_t, 2>& range,
                                       std::size_t stride) {
    std::vector<std::size_t> starts;
    for (std::size_t s = range[0]; s + kWindow <= range[1]; s += stride) starts.push_back(s);
    return starts;
}

RawFrame frame_from_slab(const std::vector<std::complex<double>>& slab, const RadarConfig& radar,
                         std::size_t frame_index) {
    const std::size_t per_frame = radar.num_rx * radar.chirps_per_frame * radar.samples_per_chirp;
    RawFrame f;
    f.num_rx = radar.num_rx;
    f.chirps = radar.chirps_per_frame;
    f.samples = radar.samples_per_chirp;
    f.frame_index = frame_index;
    f.data.assign(slab.begin() + static_cast<std::ptrdiff_t>(frame_index * per_frame),
                  slab.begin() + static_cast<std::ptrdiff_t>((frame_index + 1) * per_frame));
    return f;
}

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::cal: return "cal";
        case Split::test: return "test";
    }
    return "invalid";
}

std::string DatasetManifest::to_json() const {
    json j;
    j["format"] = "fare-dataset";
    j["version"] = 1;
    j["seed"] = seed;
    j["radar"] = radar_to_json(radar);
    j["sim"] = {{"id_identities", sim.id_identities},
                {"ood_identities", sim.ood_identities},
                {"frames_per_identity", sim.frames_per_identity},
                {"split_train", sim.split_train},
                {"split_cal", sim.split_cal},
                {"split_test", sim.split_test},
                {"window_stride", sim.window_stride}};
    j["identities"] = json::array();
    for (const IdentityEntry& e : identities) {
        j["identities"].push_back({{"id_index", e.id_index},
                                   {"label", e.label},
                                   {"role", e.is_id ? "id" : "ood"},
                                   {"file", e.raw_file},
                                   {"frames", e.frames},
                                   {"train_range", e.train_range},
                                   {"cal_range", e.cal_range},
                                   {"test_range", e.test_range}});
    }
    return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw FareError(ErrorCategory::format, strfmt("manifest is not valid JSON: %s", e.what()));
    }
    require(j.value("format", "") == "fare-dataset", ErrorCategory::format,
            "not a fare dataset manifest");
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.radar = radar_from_json(j.at("radar"));
    const json& s = j.at("sim");
    m.sim.id_identities = s.at("id_identities").get<std::size_t>();
    m.sim.ood_identities = s.at("ood_identities").get<std::size_t>();
    m.sim.frames_per_identity = s.at("frames_per_identity").get<std::size_t>();
    m.sim.split_train = s.at("split_train").get<double>();
    m.sim.split_cal = s.at("split_cal").get<double>();
    m.sim.split_test = s.at("split_test").get<double>();
    m.sim.window_stride = s.at("window_stride").get<std::size_t>();
    for (const json& e : j.at("identities")) {
        IdentityEntry entry;
        entry.id_index = e.at("id_index").get<int>();
        entry.label = e.at("label").get<std::string>();
        entry.is_id = e.at("role").get<std::string>() == "id";
        entry.raw_file = e.at("file").get<std::string>();
        entry.frames = e.at("frames").get<std::size_t>();
        entry.train_range = e.at("train_range").get<std::array<std::size_t, 2>>();
        entry.cal_range = e.at("cal_range").get<std::array<std::size_t, 2>>();
        entry.test_range = e.at("test_range").get<std::array<std::size_t, 2>>();
        m.identities.push_back(entry);
    }
    return m;
}

DatasetManifest generate_dataset(const fs::path& out_dir, const ExperimentConfig& cfg,
                                 std::uint64_t seed, bool overwrite) {
    cfg.validate();
    require(cfg.sim.frames_per_identity > 0, ErrorCategory::config,
            "frames_per_identity must be > 0");
    require(cfg.sim.id_identities > 0, ErrorCategory::config, "need at least one ID identity");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec, ErrorCategory::io, "cannot create output directory: " + out_dir.string());
    const fs::path manifest_path = out_dir / "manifest.json";
    require(overwrite || !fs::exists(manifest_path), ErrorCategory::io,
            "refusing to overwrite existing dataset at " + out_dir.string() +
                " (pass --force to allow)");

    const std::size_t total = cfg.sim.id_identities + cfg.sim.ood_identities;
    const std::size_t frames = cfg.sim.frames_per_identity;

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.radar = cfg.radar;
    manifest.sim = cfg.sim;
    manifest.identities.resize(total);

    const auto n_train = static_cast<std::size_t>(cfg.sim.split_train * static_cast<double>(frames));
    const auto n_cal = static_cast<std::size_t>(cfg.sim.split_cal * static_cast<double>(frames));

    std::exception_ptr failure = nullptr;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const int idx = static_cast<int>(i);
            const bool is_id = idx < static_cast<int>(cfg.sim.id_identities);
            IdentityEntry entry;
            entry.id_index = idx;
            entry.label = identity_label(idx, cfg.sim.id_identities);
            entry.is_id = is_id;
            entry.raw_file = "raw_" + entry.label + ".fare";
            entry.frames = frames;
            if (is_id) {
                entry.train_range = {0, n_train};
                entry.cal_range = {n_train, n_train + n_cal};
                entry.test_range = {n_train + n_cal, frames};
            } else {
                entry.train_range = {0, 0};
                entry.cal_range = {0, 0};
                entry.test_range = {0, frames};
            }

            const ScatterProfile profile = make_identity_profile(idx, seed);
            const std::uint64_t id_seed = derive_seed(seed, kStreamIdentitySim, i);
            std::vector<std::complex<double>> slab;
            slab.reserve(frames * cfg.radar.num_rx * cfg.radar.chirps_per_frame *
                         cfg.radar.samples_per_chirp);
            for (std::size_t f = 0; f < frames; ++f) {
                const RawFrame frame = simulate_if_frame(profile, cfg.radar, f, id_seed);
                slab.insert(slab.end(), frame.data.begin(), frame.data.end());
            }
            write_container(out_dir / entry.raw_file,
                            ContainerArray::from_c64(
                                {static_cast<std::uint32_t>(frames),
                                 static_cast<std::uint32_t>(cfg.radar.num_rx),
                                 static_cast<std::uint32_t>(cfg.radar.chirps_per_frame),
                                 static_cast<std::uint32_t>(cfg.radar.samples_per_chirp)},
                                slab));
            manifest.identities[static_cast<std::size_t>(i)] = entry;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    atomic_write_file(manifest_path, manifest.to_json());
    return manifest;
}

DatasetManifest load_manifest(const fs::path& dataset_dir) {
    const fs::path path = dataset_dir / "manifest.json";
    require(fs::exists(path), ErrorCategory::state,
            "missing " + path.string() + " - run 'simulate' first");
    std::ifstream in(path);
    require(in.good(), ErrorCategory::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return DatasetManifest::from_json(buf.str());
}

std::string PreprocManifest::to_json() const {
    json j;
    j["format"] = "fare-preprocessed";
    j["version"] = 1;
    j["seed"] = seed;
    j["rdi_shape"] = {rdi_rows, rdi_cols};
    j["mrdi_shape"] = {mrdi_rows, mrdi_cols};
    j["class_labels"] = class_labels;
    j["identity_labels"] = identity_labels;
    j["samples"] = json::array();
    for (const SampleRecord& r : samples) {
        j["samples"].push_back({{"identity", r.identity_index},
                                {"class", r.class_index},
                                {"split", split_name(r.split)},
                                {"window_start", r.window_start}});
    }
    return j.dump(2) + "\n";
}

PreprocManifest PreprocManifest::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw FareError(ErrorCategory::format,
                        strfmt("preprocessed manifest is not valid JSON: %s", e.what()));
    }
    require(j.value("format", "") == "fare-preprocessed", ErrorCategory::format,
            "not a fare preprocessed manifest");
    PreprocManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.rdi_rows = j.at("rdi_shape")[0].get<std::size_t>();
    m.rdi_cols = j.at("rdi_shape")[1].get<std::size_t>();
    m.mrdi_rows = j.at("mrdi_shape")[0].get<std::size_t>();
    m.mrdi_cols = j.at("mrdi_shape")[1].get<std::size_t>();
    m.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    m.identity_labels = j.at("identity_labels").get<std::vector<std::string>>();
    for (const json& e : j.at("samples")) {
        SampleRecord r;
        r.identity_index = e.at("identity").get<int>();
        r.class_index = e.at("class").get<int>();
        const std::string s = e.at("split").get<std::string>();
        r.split = s == "train" ? Split::train : (s == "cal" ? Split::cal : Split::test);
        r.window_start = e.at("window_start").get<std::size_t>();
        m.samples.push_back(r);
    }
    return m;
}

PreprocManifest preprocess_dataset(const fs::path& dataset_dir, const ExperimentConfig& cfg,
                                   std::uint64_t seed) {
    const DatasetManifest manifest = load_manifest(dataset_dir);
    require(manifest.radar.samples_per_chirp == cfg.radar.samples_per_chirp &&
                manifest.radar.chirps_per_frame == cfg.radar.chirps_per_frame &&
                manifest.radar.num_rx == cfg.radar.num_rx,
            ErrorCategory::state, "dataset manifest radar shape differs from the configuration");

    Preprocessor pre;
    pre.radar = manifest.radar;
    pre.sinc_cutoff = cfg.dsp.sinc_cutoff;
    pre.sinc_taps = cfg.dsp.sinc_taps;

    PreprocManifest out;
    out.seed = seed;
    out.rdi_rows = manifest.radar.range_bins();
    out.rdi_cols = manifest.radar.chirps_per_frame;
    out.mrdi_rows = out.rdi_rows;
    out.mrdi_cols = kWindow * manifest.radar.chirps_per_frame;
    for (std::size_t c = 0; c < manifest.sim.id_identities; ++c)
        out.class_labels.push_back(identity_label(static_cast<int>(c), manifest.sim.id_identities));

    const std::size_t stride = manifest.sim.window_stride;
    struct PerIdentity {
        std::vector<SampleRecord> records;
        std::vector<float> rdi;
        std::vector<float> mrdi;
    };
    std::vector<PerIdentity> per_identity(manifest.identities.size());

    std::exception_ptr failure = nullptr;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(manifest.identities.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const IdentityEntry& entry = manifest.identities[static_cast<std::size_t>(i)];
            const fs::path raw_path = dataset_dir / entry.raw_file;
            require(fs::exists(raw_path), ErrorCategory::state,
                    "missing " + raw_path.string() + " - run 'simulate' first");
            const ContainerArray raw = read_container(raw_path);
            const std::vector<std::complex<double>> slab = raw.to_complex();
            require(raw.dims.size() == 4 && raw.dims[0] == entry.frames, ErrorCategory::format,
                    "raw container shape does not match the manifest: " + raw_path.string());

            PerIdentity& dst = per_identity[static_cast<std::size_t>(i)];
            const std::array<std::pair<Split, std::array<std::size_t, 2>>, 3> segments{
                {{Split::train, entry.train_range},
                 {Split::cal, entry.cal_range},
                 {Split::test, entry.test_range}}};
            for (const auto& [split, range] : segments) {
                for (std::size_t start : window_starts(range, stride)) {
                    std::vector<RawFrame> frames;
                    frames.reserve(kWindow);
                    for (std::size_t f = 0; f < kWindow; ++f)
                        frames.push_back(frame_from_slab(slab, manifest.radar, start + f));
                    const RangeDopplerImage rdi = pre.build_rdi(frames.back());
                    const MicroRangeDopplerImage mrdi =
                        pre.build_micro_rdi(std::span<const RawFrame>(frames));

                    SampleRecord rec;
                    rec.identity_index = static_cast<int>(i);
                    rec.class_index = entry.is_id ? entry.id_index : -1;
                    rec.split = split;
                    rec.window_start = start;
                    dst.records.push_back(rec);
                    dst.rdi.insert(dst.rdi.end(), rdi.values.begin(), rdi.values.end());
                    dst.mrdi.insert(dst.mrdi.end(), mrdi.values.begin(), mrdi.values.end());
                }
            }

            const auto rows = static_cast<std::uint32_t>(dst.records.size());
            write_container(dataset_dir / (entry.label + "_rdi.fare"),
                            ContainerArray::from_f32({rows, static_cast<std::uint32_t>(out.rdi_rows),
                                                      static_cast<std::uint32_t>(out.rdi_cols)},
                                                     dst.rdi));
            write_container(dataset_dir / (entry.label + "_mrdi.fare"),
                            ContainerArray::from_f32({rows, static_cast<std::uint32_t>(out.mrdi_rows),
                                                      static_cast<std::uint32_t>(out.mrdi_cols)},
                                                     dst.mrdi));
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t i = 0; i < manifest.identities.size(); ++i) {
        out.identity_labels.push_back(manifest.identities[i].label);
        for (const SampleRecord& r : per_identity[i].records) out.samples.push_back(r);
    }
    atomic_write_file(dataset_dir / "preprocessed.json", out.to_json());
    return out;
}

PreprocManifest load_preproc_manifest(const fs::path& dataset_dir) {
    const fs::path path = dataset_dir / "preprocessed.json";
    require(fs::exists(path), ErrorCategory::state,
            "missing " + path.string() + " - run 'preprocess' first");
    std::ifstream in(path);
    require(in.good(), ErrorCategory::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return PreprocManifest::from_json(buf.str());
}

std::vector<std::size_t> SampleSet::indices_of(Split split, bool id_only) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].split != split) continue;
        if (id_only && records[i].class_index < 0) continue;
        out.push_back(i);
    }
    return out;
}

SampleSet load_samples(const fs::path& dataset_dir) {
    const PreprocManifest manifest = load_preproc_manifest(dataset_dir);
    SampleSet set;
    set.rdi_rows = manifest.rdi_rows;
    set.rdi_cols = manifest.rdi_cols;
    set.mrdi_rows = manifest.mrdi_rows;
    set.mrdi_cols = manifest.mrdi_cols;
    set.class_labels = manifest.class_labels;
    set.records = manifest.samples;
    set.rdi.resize(manifest.samples.size());
    set.mrdi.resize(manifest.samples.size());

    const std::size_t rdi_len = set.rdi_rows * set.rdi_cols;
    const std::size_t mrdi_len = set.mrdi_rows * set.mrdi_cols;
    std::size_t row_in_identity = 0;
    int current_identity = -1;
    std::vector<double> rdi_slab, mrdi_slab;
    for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
        const SampleRecord& rec = manifest.samples[i];
        if (rec.identity_index != current_identity) {
            current_identity = rec.identity_index;
            row_in_identity = 0;
            const std::string& label =
                manifest.identity_labels.at(static_cast<std::size_t>(current_identity));
            rdi_slab = read_container(dataset_dir / (label + "_rdi.fare")).to_f64();
            mrdi_slab = read_container(dataset_dir / (label + "_mrdi.fare")).to_f64();
        }
        require((row_in_identity + 1) * rdi_len <= rdi_slab.size() &&
                    (row_in_identity + 1) * mrdi_len <= mrdi_slab.size(),
                ErrorCategory::format, "preprocessed containers shorter than the manifest");
        set.rdi[i].assign(rdi_slab.begin() + static_cast<std::ptrdiff_t>(row_in_identity * rdi_len),
                          rdi_slab.begin() + static_cast<std::ptrdiff_t>((row_in_identity + 1) * rdi_len));
        set.mrdi[i].assign(
            mrdi_slab.begin() + static_cast<std::ptrdiff_t>(row_in_identity * mrdi_len),
            mrdi_slab.begin() + static_cast<std::ptrdiff_t>((row_in_identity + 1) * mrdi_len));
        ++row_in_identity;
    }
    return set;
}

}  // namespace fare
