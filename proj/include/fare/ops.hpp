#pragma once

#include "fare/tensor.hpp"

namespace fare::ops {

// y = x * w + bias, x [b x n], w [n x m], bias [m].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

// Zero-padded cross-correlation, x [b x ci x h x w], k [co x ci x kh x kw], bias [co].
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias,
              std::size_t stride = 1, std::size_t padding = 0);

Tensor relu(const Tensor& x);

// 2x2 mean pooling, stride 2; spatial dims must be even.
Tensor avgpool2(const Tensor& x);

// Mean pooling along the last (width) axis only, by an integral factor.
Tensor avgpool_width(const Tensor& x, std::size_t factor);

// [b, ...] -> [b, n]
Tensor flatten(const Tensor& x);

// [b x c1 x h x w] ++ [b x c2 x h x w] -> [b x (c1+c2) x h x w]
Tensor concat_channels(const Tensor& a, const Tensor& b);

// (1/b) * sum_i max(||a_i - p_i|| - ||a_i - n_i|| + margin, 0), plain
// Euclidean distances; subgradient 0 at the hinge point and at zero distance.
Tensor triplet_loss(const Tensor& anchor, const Tensor& positive, const Tensor& negative,
                    double margin);

// Mean over all elements of |x - x_hat|; subgradient 0 at ties.
Tensor mae_loss(const Tensor& x, const Tensor& x_hat);

}  // namespace fare::ops
