#include "fare/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace fare {

double grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params, double eps) {
    require(eps > 0.0, ErrorCategory::data, "grad_check eps must be > 0");

    for (Tensor& p : params) p.zero_grad();
    Tensor loss = loss_fn();
    require(std::isfinite(loss.value()), ErrorCategory::numeric,
            "grad_check: non-finite loss value");
    loss.backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) analytic.push_back(p.grad());

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        std::vector<double>& theta = params[pi].data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + eps;
            const double f_plus = loss_fn().value();
            theta[i] = saved - eps;
            const double f_minus = loss_fn().value();
            theta[i] = saved;
            require(std::isfinite(f_plus) && std::isfinite(f_minus), ErrorCategory::numeric,
                    "grad_check: non-finite perturbed loss");
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace fare
