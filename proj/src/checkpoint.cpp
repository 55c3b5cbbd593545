#include "fare/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fare {

namespace {

constexpr char kMagic[4] = {'F', 'A', 'R', 'C'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    require(in.gcount() == 4, ErrorCategory::format,
            strfmt("truncated checkpoint: missing %s", what));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    put_u32(out, static_cast<std::uint32_t>(u & 0xffffffffULL));
    put_u32(out, static_cast<std::uint32_t>(u >> 32));
}

double get_f64(std::istream& in, const char* what) {
    const std::uint64_t lo = get_u32(in, what);
    const std::uint64_t hi = get_u32(in, what);
    return std::bit_cast<double>(lo | (hi << 32));
}

void put_config(std::ostream& out, const ModelConfig& c) {
    for (std::size_t v : {c.rdi_rows, c.rdi_cols, c.mrdi_rows, c.mrdi_cols, c.layer1_channels,
                          c.layer2_channels, c.layer3_channels, c.embedding_dim})
        put_u32(out, static_cast<std::uint32_t>(v));
    for (std::size_t v : c.ip_bottleneck) put_u32(out, static_cast<std::uint32_t>(v));
    put_f64(out, c.margin);
}

ModelConfig get_config(std::istream& in) {
    ModelConfig c;
    c.rdi_rows = get_u32(in, "config");
    c.rdi_cols = get_u32(in, "config");
    c.mrdi_rows = get_u32(in, "config");
    c.mrdi_cols = get_u32(in, "config");
    c.layer1_channels = get_u32(in, "config");
    c.layer2_channels = get_u32(in, "config");
    c.layer3_channels = get_u32(in, "config");
    c.embedding_dim = get_u32(in, "config");
    for (std::size_t i = 0; i < kNumIps; ++i) c.ip_bottleneck[i] = get_u32(in, "config");
    c.margin = get_f64(in, "config");
    return c;
}

}  // namespace

const char* checkpoint_stage_name(CheckpointStage stage) {
    return stage == CheckpointStage::pp_trained ? "pp_trained" : "ip_trained";
}

void save_checkpoint(const std::filesystem::path& path, const FareModel& model,
                     CheckpointStage stage, const std::optional<ScoreNormalizer>& normalizer,
                     const std::optional<OodThreshold>& threshold) {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(stage));
    put_config(out, model.config());

    std::uint32_t flags = 0;
    if (normalizer) flags |= 1u;
    if (threshold) flags |= 2u;
    put_u32(out, flags);
    if (normalizer) {
        for (double v : normalizer->mu) put_f64(out, v);
        for (double v : normalizer->sigma) put_f64(out, v);
        put_u32(out, static_cast<std::uint32_t>(normalizer->degenerate_ips.size()));
        for (std::uint32_t ip : normalizer->degenerate_ips) put_u32(out, ip);
    }
    if (threshold) {
        put_f64(out, threshold->tau);
        put_f64(out, threshold->target_tpr);
        put_u32(out, static_cast<std::uint32_t>(threshold->calibration_size));
    }

    const std::vector<Tensor> params = model.all_parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Tensor& p : params) {
        put_u32(out, static_cast<std::uint32_t>(p.name().size()));
        out.write(p.name().data(), static_cast<std::streamsize>(p.name().size()));
        std::vector<std::uint32_t> dims;
        for (std::size_t d : p.shape()) dims.push_back(static_cast<std::uint32_t>(d));
        container_to_stream(out, ContainerArray::from_f64(dims, p.data()));
    }
    atomic_write_file(path, out.str());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const ModelConfig& expected_config) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    require(in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0, ErrorCategory::format,
            "bad checkpoint magic in " + path.string());
    const std::uint32_t version = get_u32(in, "version");
    require(version == kCheckpointVersion, ErrorCategory::format,
            strfmt("unsupported checkpoint version %u", version));
    const std::uint32_t stage_code = get_u32(in, "stage");
    require(stage_code == 1 || stage_code == 2, ErrorCategory::format,
            strfmt("unknown checkpoint stage code %u", stage_code));

    const ModelConfig stored = get_config(in);
    require(stored == expected_config, ErrorCategory::state,
            "checkpoint model configuration differs from the current configuration "
            "(shape-affecting keys changed since training)");

    LoadedCheckpoint result;
    result.stage = static_cast<CheckpointStage>(stage_code);

    const std::uint32_t flags = get_u32(in, "flags");
    if (flags & 1u) {
        ScoreNormalizer norm;
        for (double& v : norm.mu) v = get_f64(in, "normalizer");
        for (double& v : norm.sigma) v = get_f64(in, "normalizer");
        const std::uint32_t nd = get_u32(in, "normalizer");
        for (std::uint32_t i = 0; i < nd; ++i)
            norm.degenerate_ips.push_back(get_u32(in, "normalizer"));
        result.normalizer = norm;
    }
    if (flags & 2u) {
        OodThreshold thr;
        thr.tau = get_f64(in, "threshold");
        thr.target_tpr = get_f64(in, "threshold");
        thr.calibration_size = get_u32(in, "threshold");
        result.threshold = thr;
    }

    result.model = FareModel::build(stored, /*seed=*/0);
    const std::uint32_t n_sections = get_u32(in, "section count");
    for (std::uint32_t s = 0; s < n_sections; ++s) {
        const std::uint32_t name_len = get_u32(in, "section name");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        require(in.gcount() == static_cast<std::streamsize>(name_len), ErrorCategory::format,
                "truncated checkpoint section name");
        const ContainerArray array = container_from_stream(in);
        Tensor& p = result.model.param(name);
        require(array.dtype == Dtype::f64, ErrorCategory::format,
                "checkpoint parameters must be float64");
        Shape shape(array.dims.begin(), array.dims.end());
        require(shape == p.shape(), ErrorCategory::format,
                strfmt("checkpoint parameter '%s' has shape %s, expected %s", name.c_str(),
                       shape_str(shape).c_str(), shape_str(p.shape()).c_str()));
        p.data() = array.f64;
    }
    if (result.stage == CheckpointStage::ip_trained) result.model.freeze_pp();
    return result;
}

}  // namespace fare
