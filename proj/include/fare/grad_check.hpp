#pragma once

#include <functional>
#include <span>

#include "fare/tensor.hpp"

namespace fare {

// Central finite differences against reverse-mode gradients.
//
// loss_fn builds a fresh graph over the given leaf parameters and returns the
// scalar loss tensor. Returns the max relative error over all coordinates,
// with denominator max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params, double eps);

}  // namespace fare
