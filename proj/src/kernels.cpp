#include "fare/kernels.hpp"

#include <algorithm>
#include <cstring>

#include "fare/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fare::kernels {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < mm; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, n * sizeof(double));
        const double* ai = a + static_cast<std::size_t>(i) * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ai[kk];
            const double* bk = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < mm; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, n * sizeof(double));
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a[kk * m + static_cast<std::size_t>(i)];
            const double* bk = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < mm; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        const double* ai = a + static_cast<std::size_t>(i) * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
            if (accumulate) ci[j] += acc; else ci[j] = acc;
        }
    }
}

void im2col(const Conv2dShape& s, const double* x_sample, double* cols) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const std::size_t plane = s.in_h * s.in_w;
    const std::size_t npos = oh * ow;
    std::size_t row = 0;
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
        const double* xp = x_sample + ci * plane;
        for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < s.kernel_w; ++kx, ++row) {
                double* out = cols + row * npos;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                              static_cast<std::ptrdiff_t>(s.padding);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) {
                        std::memset(out + oy * ow, 0, ow * sizeof(double));
                        continue;
                    }
                    const double* xrow = xp + static_cast<std::size_t>(iy) * s.in_w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                                  static_cast<std::ptrdiff_t>(s.padding);
                        out[oy * ow + ox] =
                            (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w))
                                ? 0.0
                                : xrow[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

void col2im_add(const Conv2dShape& s, const double* cols, double* x_sample) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const std::size_t plane = s.in_h * s.in_w;
    const std::size_t npos = oh * ow;
    std::size_t row = 0;
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
        double* xp = x_sample + ci * plane;
        for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < s.kernel_w; ++kx, ++row) {
                const double* in = cols + row * npos;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                              static_cast<std::ptrdiff_t>(s.padding);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
                    double* xrow = xp + static_cast<std::size_t>(iy) * s.in_w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                                  static_cast<std::ptrdiff_t>(s.padding);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
                        xrow[static_cast<std::size_t>(ix)] += in[oy * ow + ox];
                    }
                }
            }
        }
    }
}

void conv2d_forward(const Conv2dShape& s, const double* x, const double* k,
                    const double* bias, double* y) {
    const std::size_t npos = s.out_h() * s.out_w();
    const std::size_t patch = s.patch_size();
    const std::size_t in_stride = s.in_channels * s.in_h * s.in_w;
    const std::size_t out_stride = s.out_channels * npos;
    const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(s.batch);
#pragma omp parallel
    {
        std::vector<double> cols(patch * npos);
#pragma omp for schedule(static)
        for (std::ptrdiff_t b = 0; b < batch; ++b) {
            const double* xb = x + static_cast<std::size_t>(b) * in_stride;
            double* yb = y + static_cast<std::size_t>(b) * out_stride;
            im2col(s, xb, cols.data());
            // y[co][pos] = sum_patch k[co][patch] * cols[patch][pos]
            for (std::size_t co = 0; co < s.out_channels; ++co) {
                double* yrow = yb + co * npos;
                const double bval = bias ? bias[co] : 0.0;
                for (std::size_t p = 0; p < npos; ++p) yrow[p] = bval;
                const double* krow = k + co * patch;
                for (std::size_t pk = 0; pk < patch; ++pk) {
                    const double kv = krow[pk];
                    const double* crow = cols.data() + pk * npos;
                    for (std::size_t p = 0; p < npos; ++p) yrow[p] += kv * crow[p];
                }
            }
        }
    }
}

void conv2d_grad_input(const Conv2dShape& s, const double* dy, const double* k, double* dx) {
    const std::size_t npos = s.out_h() * s.out_w();
    const std::size_t patch = s.patch_size();
    const std::size_t in_stride = s.in_channels * s.in_h * s.in_w;
    const std::size_t out_stride = s.out_channels * npos;
    const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(s.batch);
#pragma omp parallel
    {
        std::vector<double> dcols(patch * npos);
#pragma omp for schedule(static)
        for (std::ptrdiff_t b = 0; b < batch; ++b) {
            const double* dyb = dy + static_cast<std::size_t>(b) * out_stride;
            double* dxb = dx + static_cast<std::size_t>(b) * in_stride;
            // dcols[patch][pos] = sum_co k[co][patch] * dy[co][pos]
            std::memset(dcols.data(), 0, dcols.size() * sizeof(double));
            for (std::size_t co = 0; co < s.out_channels; ++co) {
                const double* krow = k + co * patch;
                const double* dyrow = dyb + co * npos;
                for (std::size_t pk = 0; pk < patch; ++pk) {
                    const double kv = krow[pk];
                    double* drow = dcols.data() + pk * npos;
                    for (std::size_t p = 0; p < npos; ++p) drow[p] += kv * dyrow[p];
                }
            }
            col2im_add(s, dcols.data(), dxb);
        }
    }
}

void conv2d_grad_params(const Conv2dShape& s, const double* x, const double* dy,
                        double* dk, double* dbias) {
    const std::size_t npos = s.out_h() * s.out_w();
    const std::size_t patch = s.patch_size();
    const std::size_t in_stride = s.in_channels * s.in_h * s.in_w;
    const std::size_t out_stride = s.out_channels * npos;
    const std::size_t ksize = s.out_channels * patch;
    const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(s.batch);

    // Per-sample partial gradients, reduced serially in batch order afterwards
    // so the result does not depend on the thread count.
    std::vector<double> partial(s.batch * ksize);
    std::vector<double> partial_bias(s.batch * s.out_channels);
#pragma omp parallel
    {
        std::vector<double> cols(patch * npos);
#pragma omp for schedule(static)
        for (std::ptrdiff_t b = 0; b < batch; ++b) {
            const double* xb = x + static_cast<std::size_t>(b) * in_stride;
            const double* dyb = dy + static_cast<std::size_t>(b) * out_stride;
            double* pk = partial.data() + static_cast<std::size_t>(b) * ksize;
            double* pb = partial_bias.data() + static_cast<std::size_t>(b) * s.out_channels;
            im2col(s, xb, cols.data());
            // dk[co][patch] = sum_pos dy[co][pos] * cols[patch][pos]
            matmul_nt(dyb, cols.data(), pk, s.out_channels, npos, patch, false);
            for (std::size_t co = 0; co < s.out_channels; ++co) {
                const double* dyrow = dyb + co * npos;
                double acc = 0.0;
                for (std::size_t p = 0; p < npos; ++p) acc += dyrow[p];
                pb[co] = acc;
            }
        }
    }
    for (std::size_t b = 0; b < s.batch; ++b) {
        const double* pk = partial.data() + b * ksize;
        for (std::size_t i = 0; i < ksize; ++i) dk[i] += pk[i];
        const double* pb = partial_bias.data() + b * s.out_channels;
        for (std::size_t co = 0; co < s.out_channels; ++co) dbias[co] += pb[co];
    }
}

Fft::Fft(std::size_t n) : n_(n) {
    require(n > 0 && (n & (n - 1)) == 0, ErrorCategory::data,
            strfmt("FFT length must be a power of two, got %zu", n));
    bit_reverse_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t bit = 0; bit < bits; ++bit)
            if (i & (std::size_t{1} << bit)) r |= std::size_t{1} << (bits - 1 - bit);
        bit_reverse_[i] = r;
    }
    // Stage twiddles: for width w, w/2 factors exp(-2*pi*i*j/w).
    for (std::size_t width = 2; width <= n; width <<= 1) {
        for (std::size_t j = 0; j < width / 2; ++j) {
            const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(width);
            twiddles_.emplace_back(std::cos(ang), std::sin(ang));
        }
    }
}

void Fft::forward(std::complex<double>* data) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j = bit_reverse_[i];
        if (i < j) std::swap(data[i], data[j]);
    }
    std::size_t tw_base = 0;
    for (std::size_t width = 2; width <= n_; width <<= 1) {
        const std::size_t half = width / 2;
        for (std::size_t start = 0; start < n_; start += width) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::complex<double> w = twiddles_[tw_base + j];
                const std::complex<double> even = data[start + j];
                const std::complex<double> odd = data[start + j + half] * w;
                data[start + j] = even + odd;
                data[start + j + half] = even - odd;
            }
        }
        tw_base += half;
    }
}

void fft_shift(std::complex<double>* data, std::size_t n) {
    std::rotate(data, data + n / 2, data + n);
}

void fft_shift(double* data, std::size_t n) {
    std::rotate(data, data + n / 2, data + n);
}

}  // namespace fare::kernels

namespace fare::ref {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[kk * n + j];
            c[i * n + j] = acc;
        }
    }
}

namespace {

inline double x_at(const kernels::Conv2dShape& s, const double* x, std::size_t b,
                   std::size_t ci, std::ptrdiff_t iy, std::ptrdiff_t ix) {
    if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h) ||
        ix >= static_cast<std::ptrdiff_t>(s.in_w))
        return 0.0;
    return x[((b * s.in_channels + ci) * s.in_h + static_cast<std::size_t>(iy)) * s.in_w +
             static_cast<std::size_t>(ix)];
}

}  // namespace

void conv2d_forward(const kernels::Conv2dShape& s, const double* x, const double* k,
                    const double* bias, double* y) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t co = 0; co < s.out_channels; ++co)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double acc = bias ? bias[co] : 0.0;
                    for (std::size_t ci = 0; ci < s.in_channels; ++ci)
                        for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
                            for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                                static_cast<std::ptrdiff_t>(s.padding);
                                const auto ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                                static_cast<std::ptrdiff_t>(s.padding);
                                acc += x_at(s, x, b, ci, iy, ix) *
                                       k[((co * s.in_channels + ci) * s.kernel_h + ky) * s.kernel_w + kx];
                            }
                    y[((b * s.out_channels + co) * oh + oy) * ow + ox] = acc;
                }
}

void conv2d_grad_input(const kernels::Conv2dShape& s, const double* dy, const double* k, double* dx) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const std::size_t n = s.batch * s.in_channels * s.in_h * s.in_w;
    for (std::size_t i = 0; i < n; ++i) dx[i] = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t co = 0; co < s.out_channels; ++co)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const double g = dy[((b * s.out_channels + co) * oh + oy) * ow + ox];
                    for (std::size_t ci = 0; ci < s.in_channels; ++ci)
                        for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
                            for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                                static_cast<std::ptrdiff_t>(s.padding);
                                const auto ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                                static_cast<std::ptrdiff_t>(s.padding);
                                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h) ||
                                    ix >= static_cast<std::ptrdiff_t>(s.in_w))
                                    continue;
                                dx[((b * s.in_channels + ci) * s.in_h + static_cast<std::size_t>(iy)) *
                                       s.in_w +
                                   static_cast<std::size_t>(ix)] +=
                                    g * k[((co * s.in_channels + ci) * s.kernel_h + ky) * s.kernel_w + kx];
                            }
                }
}

void conv2d_grad_params(const kernels::Conv2dShape& s, const double* x, const double* dy,
                        double* dk, double* dbias) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t co = 0; co < s.out_channels; ++co)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const double g = dy[((b * s.out_channels + co) * oh + oy) * ow + ox];
                    dbias[co] += g;
                    for (std::size_t ci = 0; ci < s.in_channels; ++ci)
                        for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
                            for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) -
                                                static_cast<std::ptrdiff_t>(s.padding);
                                const auto ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) -
                                                static_cast<std::ptrdiff_t>(s.padding);
                                dk[((co * s.in_channels + ci) * s.kernel_h + ky) * s.kernel_w + kx] +=
                                    g * x_at(s, x, b, ci, iy, ix);
                            }
                }
}

void dft(const std::complex<double>* in, std::complex<double>* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * fare::kPi * static_cast<double>(k) *
                               static_cast<double>(t) / static_cast<double>(n);
            acc += in[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
}

}  // namespace fare::ref
