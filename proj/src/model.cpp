#include "fare/model.hpp"

#include <cmath>

namespace fare {

const char* ip_tap_name(std::size_t ip_index) {
    switch (static_cast<IpTap>(ip_index)) {
        case IpTap::rdi_layer1: return "rdi_layer1";
        case IpTap::rdi_layer2: return "rdi_layer2";
        case IpTap::micro_layer1: return "micro_layer1";
        case IpTap::micro_layer2: return "micro_layer2";
        case IpTap::combined_layer3: return "combined_layer3";
        case IpTap::combined_layer4: return "combined_layer4";
    }
    return "invalid";
}

ModelConfig::Shapes ModelConfig::shapes() const {
    require(layer1_channels > 0 && layer2_channels > 0 && layer3_channels > 0 &&
                embedding_dim > 0,
            ErrorCategory::config, "channel counts and embedding dim must be positive");
    require(margin >= 0.0, ErrorCategory::config, "margin must be >= 0");
    require(mrdi_rows == rdi_rows, ErrorCategory::config,
            "RDI and micro-RDI must share the range axis");
    require(rdi_rows % 8 == 0 && rdi_cols % 8 == 0, ErrorCategory::config,
            "RDI dims must be divisible by 8 for the three pooling stages");
    require(mrdi_cols % 4 == 0, ErrorCategory::config, "micro-RDI Doppler axis not poolable");
    require(mrdi_cols % rdi_cols == 0, ErrorCategory::config,
            "micro-RDI Doppler axis must be an integer multiple of the RDI axis");

    Shapes s;
    s.merge_pool_factor = mrdi_cols / rdi_cols;
    const std::size_t h2 = rdi_rows / 2, h4 = rdi_rows / 4, h8 = rdi_rows / 8;
    s.ip_input[0] = layer1_channels * h2 * (rdi_cols / 2);
    s.ip_input[1] = layer2_channels * h4 * (rdi_cols / 4);
    s.ip_input[2] = layer1_channels * h2 * (mrdi_cols / 2);
    s.ip_input[3] = layer2_channels * h4 * (mrdi_cols / 4);
    s.ip_input[4] = layer3_channels * h8 * (rdi_cols / 8);
    s.ip_input[5] = embedding_dim;
    s.layer3_out = {layer3_channels, h8, rdi_cols / 8};
    return s;
}

std::size_t ModelConfig::default_bottleneck(std::size_t feature_size) {
    const std::size_t rule = (feature_size + 7) / 8;
    return std::min<std::size_t>(std::max<std::size_t>(rule, 1), 128);
}

void ModelConfig::finalize() {
    const Shapes s = shapes();
    for (std::size_t i = 0; i < kNumIps; ++i)
        if (ip_bottleneck[i] == 0) ip_bottleneck[i] = default_bottleneck(s.ip_input[i]);
    validate();
}

void ModelConfig::validate() const {
    const Shapes s = shapes();
    for (std::size_t i = 0; i < kNumIps; ++i) {
        require(ip_bottleneck[i] > 0, ErrorCategory::config,
                strfmt("ip %zu bottleneck must be positive", i));
        require(ip_bottleneck[i] < s.ip_input[i], ErrorCategory::config,
                strfmt("ip %zu (%s) bottleneck %zu must be smaller than its feature size %zu", i,
                       ip_tap_name(i), ip_bottleneck[i], s.ip_input[i]));
    }
}

namespace {

Tensor init_weight(Shape shape, std::size_t fan_in, std::uint64_t seed, std::uint64_t stream,
                   const std::string& name) {
    Rng rng(derive_seed(seed, 0x10de1, stream));
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = rng.uniform(-bound, bound);
    Tensor t = Tensor::from_data(std::move(shape), std::move(data), true);
    t.set_name(name);
    return t;
}

Tensor init_bias(std::size_t n, const std::string& name) {
    Tensor t = Tensor::zeros({n}, true);
    t.set_name(name);
    return t;
}

}  // namespace

FareModel FareModel::build(ModelConfig cfg, std::uint64_t seed) {
    cfg.finalize();
    const ModelConfig::Shapes s = cfg.shapes();

    FareModel m;
    m.cfg_ = cfg;
    const std::size_t c1 = cfg.layer1_channels, c2 = cfg.layer2_channels, c3 = cfg.layer3_channels;

    m.r1_w_ = init_weight({c1, 1, 3, 3}, 9, seed, 0, "pp.r1.weight");
    m.r1_b_ = init_bias(c1, "pp.r1.bias");
    m.r2_w_ = init_weight({c2, c1, 3, 3}, c1 * 9, seed, 1, "pp.r2.weight");
    m.r2_b_ = init_bias(c2, "pp.r2.bias");
    m.m1_w_ = init_weight({c1, 1, 3, 3}, 9, seed, 2, "pp.mr1.weight");
    m.m1_b_ = init_bias(c1, "pp.mr1.bias");
    m.m2_w_ = init_weight({c2, c1, 3, 3}, c1 * 9, seed, 3, "pp.mr2.weight");
    m.m2_b_ = init_bias(c2, "pp.mr2.bias");
    m.c3_w_ = init_weight({c3, 2 * c2, 3, 3}, 2 * c2 * 9, seed, 4, "pp.c3.weight");
    m.c3_b_ = init_bias(c3, "pp.c3.bias");
    const std::size_t flat3 = s.ip_input[4];
    m.fc_w_ = init_weight({flat3, cfg.embedding_dim}, flat3, seed, 5, "pp.fc.weight");
    m.fc_b_ = init_bias(cfg.embedding_dim, "pp.fc.bias");

    for (std::size_t i = 0; i < kNumIps; ++i) {
        IpAutoencoder& ip = m.ips_[i];
        ip.input_size = s.ip_input[i];
        ip.bottleneck = cfg.ip_bottleneck[i];
        const std::string base = strfmt("ip%zu.", i);
        ip.enc_w = init_weight({ip.input_size, ip.bottleneck}, ip.input_size, seed, 10 + 4 * i,
                               base + "enc.weight");
        ip.enc_b = init_bias(ip.bottleneck, base + "enc.bias");
        ip.dec_w = init_weight({ip.bottleneck, ip.input_size}, ip.bottleneck, seed, 12 + 4 * i,
                               base + "dec.weight");
        ip.dec_b = init_bias(ip.input_size, base + "dec.bias");
    }
    return m;
}

ForwardTrace FareModel::pp_forward(const Tensor& rdi, const Tensor& micro_rdi) const {
    require(rdi.rank() == 4 && rdi.dim(1) == 1 && rdi.dim(2) == cfg_.rdi_rows &&
                rdi.dim(3) == cfg_.rdi_cols,
            ErrorCategory::data,
            strfmt("rdi input %s does not match configured [b x 1 x %zu x %zu]",
                   shape_str(rdi.shape()).c_str(), cfg_.rdi_rows, cfg_.rdi_cols));
    require(micro_rdi.rank() == 4 && micro_rdi.dim(1) == 1 && micro_rdi.dim(2) == cfg_.mrdi_rows &&
                micro_rdi.dim(3) == cfg_.mrdi_cols,
            ErrorCategory::data,
            strfmt("micro-rdi input %s does not match configured [b x 1 x %zu x %zu]",
                   shape_str(micro_rdi.shape()).c_str(), cfg_.mrdi_rows, cfg_.mrdi_cols));
    require(rdi.dim(0) == micro_rdi.dim(0), ErrorCategory::data, "modality batch sizes differ");

    const ModelConfig::Shapes s = cfg_.shapes();
    ForwardTrace trace;
    using namespace ops;

    Tensor r1 = avgpool2(relu(conv2d(rdi, r1_w_, r1_b_, 1, 1)));
    Tensor r2 = avgpool2(relu(conv2d(r1, r2_w_, r2_b_, 1, 1)));
    Tensor m1 = avgpool2(relu(conv2d(micro_rdi, m1_w_, m1_b_, 1, 1)));
    Tensor m2 = avgpool2(relu(conv2d(m1, m2_w_, m2_b_, 1, 1)));

    Tensor merged = concat_channels(r2, avgpool_width(m2, s.merge_pool_factor));
    Tensor c3 = avgpool2(relu(conv2d(merged, c3_w_, c3_b_, 1, 1)));
    Tensor embedding = linear(flatten(c3), fc_w_, fc_b_);

    trace.embedding = embedding;
    trace.intermediates = {r1, r2, m1, m2, c3, embedding};
    return trace;
}

Tensor FareModel::ip_reconstruct(std::size_t ip_index, const Tensor& feature) const {
    require(ip_index < kNumIps, ErrorCategory::data,
            strfmt("ip index %zu out of range", ip_index));
    const IpAutoencoder& ip = ips_[ip_index];
    const std::size_t b = feature.dim(0);
    require(feature.numel() == b * ip.input_size, ErrorCategory::data,
            strfmt("feature %s does not flatten to [b x %zu] expected by ip %zu (%s)",
                   shape_str(feature.shape()).c_str(), ip.input_size, ip_index,
                   ip_tap_name(ip_index)));
    Tensor flat = feature.rank() == 2 ? feature : ops::flatten(feature);
    Tensor code = ops::linear(flat, ip.enc_w, ip.enc_b);
    return ops::linear(code, ip.dec_w, ip.dec_b);
}

FareModel::IpResult FareModel::ip_forward(std::size_t ip_index, const Tensor& feature) const {
    Tensor flat = feature.rank() == 2 ? feature : ops::flatten(feature);
    IpResult result;
    result.reconstruction = ip_reconstruct(ip_index, flat);
    result.error = ops::mae_loss(flat, result.reconstruction).value();
    return result;
}

void FareModel::freeze_pp() {
    frozen_pp_ = true;
    for (Tensor& p : pp_parameters()) p.set_requires_grad(false);
}

std::vector<Tensor> FareModel::pp_parameters() const {
    return {r1_w_, r1_b_, r2_w_, r2_b_, m1_w_, m1_b_, m2_w_, m2_b_, c3_w_, c3_b_, fc_w_, fc_b_};
}

std::vector<Tensor> FareModel::ip_parameters(std::size_t ip_index) const {
    const IpAutoencoder& ip = ips_.at(ip_index);
    return {ip.enc_w, ip.enc_b, ip.dec_w, ip.dec_b};
}

std::vector<Tensor> FareModel::all_parameters() const {
    std::vector<Tensor> all = pp_parameters();
    for (std::size_t i = 0; i < kNumIps; ++i)
        for (const Tensor& t : ip_parameters(i)) all.push_back(t);
    return all;
}

Tensor& FareModel::param(const std::string& name) {
    for (Tensor* t : {&r1_w_, &r1_b_, &r2_w_, &r2_b_, &m1_w_, &m1_b_, &m2_w_, &m2_b_, &c3_w_,
                      &c3_b_, &fc_w_, &fc_b_})
        if (t->name() == name) return *t;
    for (auto& ip : ips_)
        for (Tensor* t : {&ip.enc_w, &ip.enc_b, &ip.dec_w, &ip.dec_b})
            if (t->name() == name) return *t;
    throw FareError(ErrorCategory::data, "unknown parameter: " + name);
}

}  // namespace fare
