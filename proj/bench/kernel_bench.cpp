// Compares the OpenMP kernels against the serial reference implementations:
// same inputs, wall time and max absolute deviation reported per kernel.
// Run with OMP_NUM_THREADS=N to see scaling.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "fare/common.hpp"
#include "fare/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

std::vector<double> random_vec(std::size_t n, fare::Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void report(const char* name, double par_ms, double ser_ms, double diff) {
    std::printf("%-22s parallel %9.3f ms   serial %9.3f ms   speedup %5.2fx   max|diff| %.3g\n",
                name, par_ms, ser_ms, ser_ms / par_ms, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled (serial build)\n");
#endif
    fare::Rng rng(42);

    {
        const std::size_t m = 64, k = 512, n = 512;
        const std::vector<double> a = random_vec(m * k, rng);
        const std::vector<double> b = random_vec(k * n, rng);
        std::vector<double> c_par(m * n), c_ser(m * n);
        const double par =
            time_ms([&] { fare::kernels::matmul(a.data(), b.data(), c_par.data(), m, k, n); }, 20);
        const double ser =
            time_ms([&] { fare::ref::matmul(a.data(), b.data(), c_ser.data(), m, k, n); }, 20);
        report("matmul 64x512x512", par, ser, max_abs_diff(c_par, c_ser));
    }

    {
        fare::kernels::Conv2dShape s;
        s.batch = 16;
        s.in_channels = 8;
        s.in_h = 32;
        s.in_w = 64;
        s.out_channels = 16;
        s.kernel_h = s.kernel_w = 3;
        s.stride = 1;
        s.padding = 1;
        const std::vector<double> x = random_vec(s.batch * s.in_channels * s.in_h * s.in_w, rng);
        const std::vector<double> k = random_vec(s.out_channels * s.patch_size(), rng);
        const std::vector<double> bias = random_vec(s.out_channels, rng);
        const std::size_t out_n = s.batch * s.out_channels * s.out_h() * s.out_w();
        std::vector<double> y_par(out_n), y_ser(out_n);
        const double par = time_ms(
            [&] { fare::kernels::conv2d_forward(s, x.data(), k.data(), bias.data(), y_par.data()); },
            10);
        const double ser = time_ms(
            [&] { fare::ref::conv2d_forward(s, x.data(), k.data(), bias.data(), y_ser.data()); }, 10);
        report("conv2d 16x8x32x64", par, ser, max_abs_diff(y_par, y_ser));
    }

    {
        const std::size_t n = 512;
        std::vector<std::complex<double>> base(n);
        for (auto& v : base) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const fare::kernels::Fft fft(n);
        std::vector<std::complex<double>> buf = base, out_ser(n);
        const double par = time_ms(
            [&] {
                buf = base;
                fft.forward(buf.data());
            },
            200);
        const double ser = time_ms([&] { fare::ref::dft(base.data(), out_ser.data(), n); }, 5);
        double diff = 0.0;
        buf = base;
        fft.forward(buf.data());
        fare::ref::dft(base.data(), out_ser.data(), n);
        for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(buf[i] - out_ser[i]));
        report("fft 512 vs dft", par, ser, diff);
    }

    return 0;
}
