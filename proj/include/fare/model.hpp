#pragma once

#include <array>
#include <cstdint>

#include "fare/ops.hpp"

namespace fare {

// The six intermediate taps, in canonical order.
enum class IpTap : std::size_t {
    rdi_layer1 = 0,
    rdi_layer2 = 1,
    micro_layer1 = 2,
    micro_layer2 = 3,
    combined_layer3 = 4,
    combined_layer4 = 5,
};

constexpr std::size_t kNumIps = 6;
const char* ip_tap_name(std::size_t ip_index);

struct ModelConfig {
    std::size_t rdi_rows = 32;
    std::size_t rdi_cols = 64;
    std::size_t mrdi_rows = 32;
    std::size_t mrdi_cols = 512;
    std::size_t layer1_channels = 8;
    std::size_t layer2_channels = 16;
    std::size_t layer3_channels = 32;
    std::size_t embedding_dim = 64;
    std::array<std::size_t, kNumIps> ip_bottleneck{};  // 0 entries resolve to the default rule
    double margin = 2.0;

    struct Shapes {
        std::size_t merge_pool_factor = 1;
        // Flattened feature size seen by each IP, canonical order.
        std::array<std::size_t, kNumIps> ip_input{};
        std::array<std::size_t, 3> layer3_out{};  // channels, h, w after pooling
    };

    // Validates divisibility and returns the derived feature geometry.
    Shapes shapes() const;

    // ceil(feature/8), capped at 128 so the widest autoencoder stays tractable.
    static std::size_t default_bottleneck(std::size_t feature_size);

    // Resolves zero bottleneck entries and validates everything.
    void finalize();
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct ForwardTrace {
    Tensor embedding;                            // [b x embedding_dim]
    std::array<Tensor, kNumIps> intermediates;   // post-activation sublayer outputs
};

struct IpAutoencoder {
    Tensor enc_w, enc_b, dec_w, dec_b;
    std::size_t input_size = 0;
    std::size_t bottleneck = 0;
};

class FareModel {
public:
    // Uniform +-sqrt(1/fan_in) weights, zero biases, deterministic from seed.
    static FareModel build(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    bool frozen_pp() const { return frozen_pp_; }

    // Classification path over both modalities; returns the embedding plus the
    // six tapped features. Pure given parameters.
    ForwardTrace pp_forward(const Tensor& rdi, const Tensor& micro_rdi) const;

    // Autoencoder pass of one IP over a (flattened) feature.
    Tensor ip_reconstruct(std::size_t ip_index, const Tensor& feature) const;

    struct IpResult {
        Tensor reconstruction;
        double error = 0.0;  // MAE against the input feature
    };
    IpResult ip_forward(std::size_t ip_index, const Tensor& feature) const;

    // Stops gradient accumulation into PP parameters for good.
    void freeze_pp();

    std::vector<Tensor> pp_parameters() const;                 // canonical order
    std::vector<Tensor> ip_parameters(std::size_t ip_index) const;
    std::vector<Tensor> all_parameters() const;                // pp then ip0..ip5

    const IpAutoencoder& ip(std::size_t i) const { return ips_.at(i); }
    IpAutoencoder& ip(std::size_t i) { return ips_.at(i); }

    // Direct parameter access for serialization and tests.
    Tensor& param(const std::string& name);

private:
    ModelConfig cfg_;
    bool frozen_pp_ = false;

    Tensor r1_w_, r1_b_, r2_w_, r2_b_;
    Tensor m1_w_, m1_b_, m2_w_, m2_b_;
    Tensor c3_w_, c3_b_, fc_w_, fc_b_;
    std::array<IpAutoencoder, kNumIps> ips_;
};

}  // namespace fare
