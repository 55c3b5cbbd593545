#include "fare/adamax.hpp"

#include <cmath>

namespace fare {

void AdamaxConfig::validate() const {
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCategory::config,
            "adamax betas must lie in [0, 1)");
    require(epsilon >= 0.0, ErrorCategory::config, "adamax epsilon must be >= 0");
    require(std::isfinite(alpha), ErrorCategory::config, "adamax alpha must be finite");
}

Adamax::Adamax(AdamaxConfig cfg, std::vector<Tensor> params)
    : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    m_.reserve(params_.size());
    u_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        u_.emplace_back(p.numel(), 0.0);
    }
}

void Adamax::step() {
    ++t_;
    const double bias_correction = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double rate = cfg_.alpha / bias_correction;
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        const std::vector<double>& g = p.grad();
        std::vector<double>& m = m_[pi];
        std::vector<double>& u = u_[pi];
        std::vector<double>& theta = p.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            require(std::isfinite(g[i]), ErrorCategory::numeric,
                    strfmt("non-finite gradient in parameter '%s' at index %zu",
                           p.name().empty() ? "<unnamed>" : p.name().c_str(), i));
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            u[i] = std::max(cfg_.beta2 * u[i], std::fabs(g[i]));
            if (cfg_.alpha != 0.0) theta[i] -= rate * m[i] / (u[i] + cfg_.epsilon);
        }
    }
}

}  // namespace fare
