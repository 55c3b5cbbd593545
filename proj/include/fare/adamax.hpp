#pragma once

#include <vector>

#include "fare/tensor.hpp"

namespace fare {

struct AdamaxConfig {
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

// Adamax update, per parameter tensor:
//   m <- beta1*m + (1-beta1)*g
//   u <- max(beta2*u, |g|)
//   theta <- theta - (alpha / (1 - beta1^t)) * m / (u + epsilon)
// t starts at 0 and increments once per step(), before use.
class Adamax {
public:
    Adamax(AdamaxConfig cfg, std::vector<Tensor> params);

    // Applies one update from the parameters' current gradients.
    // Throws ErrorCategory::numeric naming the parameter on a non-finite gradient.
    void step();

    std::size_t step_count() const { return t_; }
    const AdamaxConfig& config() const { return cfg_; }
    const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
    const std::vector<double>& inf_norm(std::size_t i) const { return u_[i]; }

private:
    AdamaxConfig cfg_;
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> u_;
    std::size_t t_ = 0;
};

}  // namespace fare
