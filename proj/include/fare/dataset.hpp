#pragma once

#include <filesystem>
#include <optional>

#include "fare/config.hpp"
#include "fare/dsp.hpp"

namespace fare {

enum class Split { train, cal, test };
const char* split_name(Split s);

struct IdentityEntry {
    int id_index = 0;
    std::string label;     // PER1.. for enrolled, OOD01.. for unknown
    bool is_id = false;    // enrolled (in-distribution) identity
    std::string raw_file;  // container with [frames][rx][chirps][samples] complex64
    std::size_t frames = 0;
    // Half-open frame ranges; OOD identities have empty train/cal ranges.
    std::array<std::size_t, 2> train_range{0, 0};
    std::array<std::size_t, 2> cal_range{0, 0};
    std::array<std::size_t, 2> test_range{0, 0};
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    RadarConfig radar;
    SimConfig sim;
    std::vector<IdentityEntry> identities;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
};

// Simulates every identity and writes raw containers plus manifest.json into
// out_dir. Identities are independent, so generation parallelizes across them.
DatasetManifest generate_dataset(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                                 std::uint64_t seed, bool overwrite);

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);

// One network sample: the RDI of a window's last frame plus the micro-RDI of
// the whole 8-frame window.
struct SampleRecord {
    int identity_index = 0;  // position in manifest.identities
    int class_index = -1;    // 0.. for ID identities, -1 for OOD
    Split split = Split::test;
    std::size_t window_start = 0;
};

struct PreprocManifest {
    std::uint64_t seed = 0;
    std::size_t rdi_rows = 0, rdi_cols = 0;
    std::size_t mrdi_rows = 0, mrdi_cols = 0;
    std::vector<std::string> class_labels;  // PER1..PERn
    std::vector<std::string> identity_labels;
    std::vector<SampleRecord> samples;      // index order matches image containers

    std::string to_json() const;
    static PreprocManifest from_json(const std::string& text);
};

// Builds RDI / micro-RDI containers for every sample window of every identity.
// Windows never straddle split boundaries.
PreprocManifest preprocess_dataset(const std::filesystem::path& dataset_dir,
                                   const ExperimentConfig& cfg, std::uint64_t seed);

PreprocManifest load_preproc_manifest(const std::filesystem::path& dataset_dir);

// Preprocessed samples materialized in memory for training and evaluation.
struct SampleSet {
    std::size_t rdi_rows = 0, rdi_cols = 0;
    std::size_t mrdi_rows = 0, mrdi_cols = 0;
    std::vector<std::string> class_labels;
    std::vector<SampleRecord> records;
    std::vector<std::vector<double>> rdi;   // one image per sample
    std::vector<std::vector<double>> mrdi;

    std::size_t size() const { return records.size(); }
    std::vector<std::size_t> indices_of(Split split, bool id_only) const;
};

SampleSet load_samples(const std::filesystem::path& dataset_dir);

}  // namespace fare
