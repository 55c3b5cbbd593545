#include "fare/ops.hpp"

#include <cmath>
#include <cstring>

#include "fare/kernels.hpp"

namespace fare::ops {

namespace {

void check_shape(bool ok, const char* op, const std::string& detail) {
    require(ok, ErrorCategory::data, std::string(op) + ": " + detail);
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    check_shape(x.rank() == 2 && w.rank() == 2 && bias.rank() == 1, "linear",
                "expected x [b x n], w [n x m], bias [m]");
    const std::size_t b = x.dim(0), n = x.dim(1), m = w.dim(1);
    check_shape(w.dim(0) == n && bias.dim(0) == m, "linear",
                strfmt("shape mismatch: x %s, w %s, bias %s", shape_str(x.shape()).c_str(),
                       shape_str(w.shape()).c_str(), shape_str(bias.shape()).c_str()));

    auto xn = x.node(), wn = w.node(), bn = bias.node();
    Tensor y = make_op_output({b, m}, {xn, wn, bn}, [xn, wn, bn, b, n, m](TensorNode& self) {
        const double* dy = self.grad.data();
        if (xn->requires_grad) {
            xn->ensure_grad();
            kernels::matmul_nt(dy, wn->value.data(), xn->grad.data(), b, m, n, true);
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            kernels::matmul_tn(xn->value.data(), dy, wn->grad.data(), n, b, m, true);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < m; ++j) bn->grad[j] += dy[i * m + j];
        }
    });
    kernels::matmul(x.data().data(), w.data().data(), y.data().data(), b, n, m);
    double* out = y.data().data();
    const double* bv = bias.data().data();
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bv[j];
    return y;
}

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
    check_shape(x.rank() == 4 && k.rank() == 4 && bias.rank() == 1, "conv2d",
                "expected x [b x ci x h x w], k [co x ci x kh x kw], bias [co]");
    kernels::Conv2dShape s;
    s.batch = x.dim(0);
    s.in_channels = x.dim(1);
    s.in_h = x.dim(2);
    s.in_w = x.dim(3);
    s.out_channels = k.dim(0);
    s.kernel_h = k.dim(2);
    s.kernel_w = k.dim(3);
    s.stride = stride;
    s.padding = padding;
    check_shape(k.dim(1) == s.in_channels, "conv2d", "kernel in-channel mismatch");
    check_shape(bias.dim(0) == s.out_channels, "conv2d", "bias length mismatch");
    check_shape(stride >= 1, "conv2d", "stride must be >= 1");
    check_shape(s.kernel_h <= s.in_h + 2 * padding && s.kernel_w <= s.in_w + 2 * padding,
                "conv2d", "kernel larger than padded input");

    auto xn = x.node(), kn = k.node(), bn = bias.node();
    Tensor y = make_op_output({s.batch, s.out_channels, s.out_h(), s.out_w()}, {xn, kn, bn},
                              [xn, kn, bn, s](TensorNode& self) {
                                  const double* dy = self.grad.data();
                                  if (xn->requires_grad) {
                                      xn->ensure_grad();
                                      kernels::conv2d_grad_input(s, dy, kn->value.data(),
                                                                 xn->grad.data());
                                  }
                                  if (kn->requires_grad || bn->requires_grad) {
                                      kn->ensure_grad();
                                      bn->ensure_grad();
                                      kernels::conv2d_grad_params(s, xn->value.data(), dy,
                                                                  kn->grad.data(), bn->grad.data());
                                  }
                              });
    kernels::conv2d_forward(s, x.data().data(), k.data().data(), bias.data().data(),
                            y.data().data());
    return y;
}

Tensor relu(const Tensor& x) {
    auto xn = x.node();
    Tensor y = make_op_output(x.shape(), {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const std::size_t n = self.value.size();
        for (std::size_t i = 0; i < n; ++i)
            if (xn->value[i] > 0.0) xn->grad[i] += self.grad[i];
    });
    const std::size_t n = x.numel();
    const double* in = x.data().data();
    double* out = y.data().data();
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    return y;
}

Tensor avgpool2(const Tensor& x) {
    check_shape(x.rank() == 4, "avgpool2", "expected x [b x c x h x w]");
    const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check_shape(h % 2 == 0 && w % 2 == 0, "avgpool2",
                strfmt("spatial dims must be even, got %zux%zu", h, w));
    const std::size_t oh = h / 2, ow = w / 2;

    auto xn = x.node();
    Tensor y = make_op_output({b, c, oh, ow}, {xn}, [xn, b, c, h, w, oh, ow](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < b * c; ++i) {
            const double* g = self.grad.data() + i * oh * ow;
            double* dx = xn->grad.data() + i * h * w;
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const double v = g[oy * ow + ox] * 0.25;
                    dx[(2 * oy) * w + 2 * ox] += v;
                    dx[(2 * oy) * w + 2 * ox + 1] += v;
                    dx[(2 * oy + 1) * w + 2 * ox] += v;
                    dx[(2 * oy + 1) * w + 2 * ox + 1] += v;
                }
        }
    });
    const double* in = x.data().data();
    double* out = y.data().data();
    for (std::size_t i = 0; i < b * c; ++i) {
        const double* xi = in + i * h * w;
        double* yi = out + i * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                yi[oy * ow + ox] = 0.25 * (xi[(2 * oy) * w + 2 * ox] + xi[(2 * oy) * w + 2 * ox + 1] +
                                           xi[(2 * oy + 1) * w + 2 * ox] +
                                           xi[(2 * oy + 1) * w + 2 * ox + 1]);
    }
    return y;
}

Tensor avgpool_width(const Tensor& x, std::size_t factor) {
    check_shape(x.rank() == 4, "avgpool_width", "expected x [b x c x h x w]");
    check_shape(factor >= 1, "avgpool_width", "factor must be >= 1");
    const std::size_t rows = x.dim(0) * x.dim(1) * x.dim(2), w = x.dim(3);
    check_shape(w % factor == 0, "avgpool_width",
                strfmt("width %zu not divisible by factor %zu", w, factor));
    const std::size_t ow = w / factor;
    const double inv = 1.0 / static_cast<double>(factor);

    auto xn = x.node();
    Tensor y = make_op_output({x.dim(0), x.dim(1), x.dim(2), ow}, {xn},
                              [xn, rows, w, ow, factor, inv](TensorNode& self) {
                                  if (!xn->requires_grad) return;
                                  xn->ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                      const double* g = self.grad.data() + r * ow;
                                      double* dx = xn->grad.data() + r * w;
                                      for (std::size_t j = 0; j < ow; ++j) {
                                          const double v = g[j] * inv;
                                          for (std::size_t f = 0; f < factor; ++f)
                                              dx[j * factor + f] += v;
                                      }
                                  }
                              });
    const double* in = x.data().data();
    double* out = y.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xi = in + r * w;
        double* yi = out + r * ow;
        for (std::size_t j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (std::size_t f = 0; f < factor; ++f) acc += xi[j * factor + f];
            yi[j] = acc * inv;
        }
    }
    return y;
}

Tensor flatten(const Tensor& x) {
    check_shape(x.rank() >= 1, "flatten", "expected a batched tensor");
    const std::size_t b = x.dim(0), n = x.numel() / (b == 0 ? 1 : b);
    auto xn = x.node();
    Tensor y = make_op_output({b, n}, {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
    });
    y.data() = x.data();
    return y;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_shape(a.rank() == 4 && b.rank() == 4, "concat_channels", "expected rank-4 inputs");
    check_shape(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
                "concat_channels",
                strfmt("incompatible shapes %s and %s", shape_str(a.shape()).c_str(),
                       shape_str(b.shape()).c_str()));
    const std::size_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::size_t plane = a.dim(2) * a.dim(3);
    auto an = a.node(), bn = b.node();
    Tensor y = make_op_output({batch, ca + cb, a.dim(2), a.dim(3)}, {an, bn},
                              [an, bn, batch, ca, cb, plane](TensorNode& self) {
                                  const std::size_t stride = (ca + cb) * plane;
                                  if (an->requires_grad) {
                                      an->ensure_grad();
                                      for (std::size_t i = 0; i < batch; ++i)
                                          for (std::size_t j = 0; j < ca * plane; ++j)
                                              an->grad[i * ca * plane + j] += self.grad[i * stride + j];
                                  }
                                  if (bn->requires_grad) {
                                      bn->ensure_grad();
                                      for (std::size_t i = 0; i < batch; ++i)
                                          for (std::size_t j = 0; j < cb * plane; ++j)
                                              bn->grad[i * cb * plane + j] +=
                                                  self.grad[i * stride + ca * plane + j];
                                  }
                              });
    double* out = y.data().data();
    const double* av = a.data().data();
    const double* bv = b.data().data();
    const std::size_t stride = (ca + cb) * plane;
    for (std::size_t i = 0; i < batch; ++i) {
        std::memcpy(out + i * stride, av + i * ca * plane, ca * plane * sizeof(double));
        std::memcpy(out + i * stride + ca * plane, bv + i * cb * plane, cb * plane * sizeof(double));
    }
    return y;
}

Tensor triplet_loss(const Tensor& anchor, const Tensor& positive, const Tensor& negative,
                    double margin) {
    check_shape(anchor.rank() == 2, "triplet_loss", "expected [b x d] embeddings");
    check_shape(anchor.shape() == positive.shape() && anchor.shape() == negative.shape(),
                "triplet_loss", "anchor/positive/negative shapes differ");
    check_shape(margin >= 0.0, "triplet_loss", "margin must be >= 0");
    const std::size_t b = anchor.dim(0), d = anchor.dim(1);
    check_shape(b > 0, "triplet_loss", "empty batch");

    auto an = anchor.node(), pn = positive.node(), nn = negative.node();
    // Forward quantities reused by the backward pass.
    auto dist_ap = std::make_shared<std::vector<double>>(b);
    auto dist_an = std::make_shared<std::vector<double>>(b);
    auto active = std::make_shared<std::vector<bool>>(b);

    Tensor loss = make_op_output(
        {1}, {an, pn, nn}, [an, pn, nn, dist_ap, dist_an, active, b, d](TensorNode& self) {
            const double g = self.grad[0] / static_cast<double>(b);
            if (an->requires_grad) an->ensure_grad();
            if (pn->requires_grad) pn->ensure_grad();
            if (nn->requires_grad) nn->ensure_grad();
            for (std::size_t i = 0; i < b; ++i) {
                if (!(*active)[i]) continue;
                const double* av = an->value.data() + i * d;
                const double* pv = pn->value.data() + i * d;
                const double* nv = nn->value.data() + i * d;
                const double dap = (*dist_ap)[i], dan = (*dist_an)[i];
                for (std::size_t j = 0; j < d; ++j) {
                    const double up = dap > 0.0 ? (av[j] - pv[j]) / dap : 0.0;
                    const double un = dan > 0.0 ? (av[j] - nv[j]) / dan : 0.0;
                    if (an->requires_grad) an->grad[i * d + j] += g * (up - un);
                    if (pn->requires_grad) pn->grad[i * d + j] -= g * up;
                    if (nn->requires_grad) nn->grad[i * d + j] += g * un;
                }
            }
        });

    const double* av = anchor.data().data();
    const double* pv = positive.data().data();
    const double* nv = negative.data().data();
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double sap = 0.0, san = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dp = av[i * d + j] - pv[i * d + j];
            const double dn = av[i * d + j] - nv[i * d + j];
            sap += dp * dp;
            san += dn * dn;
        }
        (*dist_ap)[i] = std::sqrt(sap);
        (*dist_an)[i] = std::sqrt(san);
        const double hinge = (*dist_ap)[i] - (*dist_an)[i] + margin;
        (*active)[i] = hinge > 0.0;
        if (hinge > 0.0) total += hinge;
    }
    loss.data()[0] = total / static_cast<double>(b);
    return loss;
}

Tensor mae_loss(const Tensor& x, const Tensor& x_hat) {
    check_shape(x.shape() == x_hat.shape(), "mae_loss",
                strfmt("shape mismatch %s vs %s", shape_str(x.shape()).c_str(),
                       shape_str(x_hat.shape()).c_str()));
    const std::size_t n = x.numel();
    check_shape(n > 0, "mae_loss", "empty tensors");

    auto xn = x.node(), hn = x_hat.node();
    Tensor loss = make_op_output({1}, {xn, hn}, [xn, hn, n](TensorNode& self) {
        const double g = self.grad[0] / static_cast<double>(n);
        if (xn->requires_grad) xn->ensure_grad();
        if (hn->requires_grad) hn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = xn->value[i] - hn->value[i];
            const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            if (xn->requires_grad) xn->grad[i] += g * s;
            if (hn->requires_grad) hn->grad[i] -= g * s;
        }
    });
    const double* xv = x.data().data();
    const double* hv = x_hat.data().data();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::fabs(xv[i] - hv[i]);
    loss.data()[0] = total / static_cast<double>(n);
    return loss;
}

}  // namespace fare::ops
