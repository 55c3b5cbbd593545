#pragma once

#include <complex>
#include <cstddef>
#include <vector>

// Numeric hot loops. Everything in fare::kernels is OpenMP-parallel but
// bitwise deterministic for any thread count: each output element is owned by
// exactly one iteration and inner accumulations run in a fixed serial order.
// fare::ref holds the plain-loop serial reference implementations; tests use
// them as oracles and the benchmark target compares the two.

namespace fare::kernels {

// C[M x N] = A[M x K] * B[K x N]; accumulates into C when accumulate is set.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// C[M x N] = A^T * B with A stored [K x M], B stored [K x N].
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// C[M x N] = A * B^T with A stored [M x K], B stored [N x K].
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

struct Conv2dShape {
    std::size_t batch = 0;
    std::size_t in_channels = 0;
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;

    std::size_t out_h() const { return (in_h + 2 * padding - kernel_h) / stride + 1; }
    std::size_t out_w() const { return (in_w + 2 * padding - kernel_w) / stride + 1; }
    std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
};

// Zero-padded cross-correlation, x[b][ci][h][w], k[co][ci][kh][kw], y[b][co][oh][ow].
// Internally im2col + matmul per sample, parallel across the batch.
void conv2d_forward(const Conv2dShape& s, const double* x, const double* k,
                    const double* bias, double* y);

// dL/dx from dL/dy, accumulated into dx.
void conv2d_grad_input(const Conv2dShape& s, const double* dy, const double* k, double* dx);

// dL/dk and dL/dbias from dL/dy; both accumulated over the batch in index order.
void conv2d_grad_params(const Conv2dShape& s, const double* x, const double* dy,
                        double* dk, double* dbias);

// Scatters x into column matrix cols[patch_size][oh*ow] for one sample.
void im2col(const Conv2dShape& s, const double* x_sample, double* cols);
void col2im_add(const Conv2dShape& s, const double* cols, double* x_sample);

// Radix-2 FFT for power-of-two lengths; forward, unnormalized.
// Built once per length, then applied to many rows.
class Fft {
public:
    explicit Fft(std::size_t n);
    std::size_t size() const { return n_; }
    void forward(std::complex<double>* data) const;

private:
    std::size_t n_;
    std::vector<std::size_t> bit_reverse_;
    std::vector<std::complex<double>> twiddles_;  // one per stage, stacked
};

// Rotates so the zero-frequency bin sits at n/2.
void fft_shift(std::complex<double>* data, std::size_t n);
void fft_shift(double* data, std::size_t n);

}  // namespace fare::kernels

namespace fare::ref {

// Naive triple loop, serial.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// Direct seven-loop convolution and its gradients, serial.
void conv2d_forward(const kernels::Conv2dShape& s, const double* x, const double* k,
                    const double* bias, double* y);
void conv2d_grad_input(const kernels::Conv2dShape& s, const double* dy, const double* k, double* dx);
void conv2d_grad_params(const kernels::Conv2dShape& s, const double* x, const double* dy,
                        double* dk, double* dbias);

// Direct O(N^2) DFT, any length.
void dft(const std::complex<double>* in, std::complex<double>* out, std::size_t n);

}  // namespace fare::ref
