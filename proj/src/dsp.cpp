#include "fare/dsp.hpp"

#include <cmath>

#include "fare/kernels.hpp"

namespace fare {

namespace {

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

bool power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Reflection about the edge sample: x[-k] = x[k], x[n-1+k] = x[n-1-k].
// Preserves constants and Nyquist-rate alternation exactly.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= sn) {
        if (i < 0) i = -i;
        if (i >= sn) i = 2 * (sn - 1) - i;
    }
    return static_cast<std::size_t>(i);
}

}  // namespace

RangeProfileCube range_fft(const RawFrame& frame, const RadarConfig& cfg) {
    require(frame.num_rx == cfg.num_rx && frame.chirps == cfg.chirps_per_frame &&
                frame.samples == cfg.samples_per_chirp,
            ErrorCategory::data, "frame shape does not match the radar configuration");
    require(power_of_two(frame.samples), ErrorCategory::data,
            strfmt("samples per chirp must be a power of two, got %zu", frame.samples));

    const std::size_t n = frame.samples;
    const std::size_t bins = n / 2;
    const std::vector<double> window = hann_window(n);
    const kernels::Fft fft(n);

    RangeProfileCube cube;
    cube.num_rx = frame.num_rx;
    cube.chirps = frame.chirps;
    cube.bins = bins;
    cube.range_resolution_m = cfg.range_bin_width();
    cube.values.resize(frame.num_rx * frame.chirps * bins);

    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(frame.num_rx * frame.chirps);
#pragma omp parallel
    {
        std::vector<std::complex<double>> buf(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t row = 0; row < rows; ++row) {
            const std::complex<double>* src = frame.data.data() + static_cast<std::size_t>(row) * n;
            std::complex<double> mean(0.0, 0.0);
            for (std::size_t i = 0; i < n; ++i) mean += src[i];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) buf[i] = (src[i] - mean) * window[i];
            fft.forward(buf.data());
            std::complex<double>* dst = cube.values.data() + static_cast<std::size_t>(row) * bins;
            for (std::size_t i = 0; i < bins; ++i) dst[i] = buf[i];
        }
    }
    return cube;
}

RangeProfileCube mti_filter(const RangeProfileCube& cube) {
    require(cube.chirps >= 2, ErrorCategory::data, "MTI requires at least two chirps");
    RangeProfileCube out = cube;
    const std::ptrdiff_t lanes = static_cast<std::ptrdiff_t>(cube.num_rx * cube.bins);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t lane = 0; lane < lanes; ++lane) {
        const std::size_t rx = static_cast<std::size_t>(lane) / cube.bins;
        const std::size_t bin = static_cast<std::size_t>(lane) % cube.bins;
        std::complex<double> mean(0.0, 0.0);
        for (std::size_t m = 0; m < cube.chirps; ++m) mean += cube.at(rx, m, bin);
        mean /= static_cast<double>(cube.chirps);
        for (std::size_t m = 0; m < cube.chirps; ++m) out.at(rx, m, bin) -= mean;
    }
    return out;
}

std::vector<double> sinc_kernel(double cutoff_fraction, std::size_t taps) {
    require(cutoff_fraction > 0.0 && cutoff_fraction <= 0.5, ErrorCategory::config,
            strfmt("sinc cutoff fraction must lie in (0, 0.5], got %g", cutoff_fraction));
    require(taps >= 1 && taps % 2 == 1, ErrorCategory::config, "sinc kernel needs an odd tap count");
    const auto mid = static_cast<std::ptrdiff_t>(taps / 2);
    std::vector<double> h(taps);
    double sum = 0.0;
    for (std::size_t i = 0; i < taps; ++i) {
        const double m = static_cast<double>(static_cast<std::ptrdiff_t>(i) - mid);
        const double x = 2.0 * cutoff_fraction * m;
        const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
        const double w =
            0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(taps - 1)));
        h[i] = sinc * (taps == 1 ? 1.0 : w);
        sum += h[i];
    }
    require(sum != 0.0, ErrorCategory::numeric, "degenerate sinc kernel");
    for (double& v : h) v /= sum;  // unit DC gain
    return h;
}

RangeProfileCube sinc_lowpass(const RangeProfileCube& cube, double cutoff_fraction,
                              std::size_t taps) {
    const std::vector<double> h = sinc_kernel(cutoff_fraction, taps);
    const auto mid = static_cast<std::ptrdiff_t>(taps / 2);
    RangeProfileCube out = cube;
    const std::ptrdiff_t lanes = static_cast<std::ptrdiff_t>(cube.num_rx * cube.bins);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t lane = 0; lane < lanes; ++lane) {
        const std::size_t rx = static_cast<std::size_t>(lane) / cube.bins;
        const std::size_t bin = static_cast<std::size_t>(lane) % cube.bins;
        for (std::size_t m = 0; m < cube.chirps; ++m) {
            std::complex<double> acc(0.0, 0.0);
            for (std::size_t k = 0; k < taps; ++k) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(m) +
                                           static_cast<std::ptrdiff_t>(k) - mid;
                acc += h[k] * cube.at(rx, reflect_index(src, cube.chirps), bin);
            }
            out.at(rx, m, bin) = acc;
        }
    }
    return out;
}

RangeProfileCube doppler_spectrum(const RangeProfileCube& cube) {
    require(power_of_two(cube.chirps), ErrorCategory::data,
            strfmt("slow-time length must be a power of two, got %zu", cube.chirps));
    const std::size_t d = cube.chirps;
    const std::vector<double> window = hann_window(d);
    const kernels::Fft fft(d);

    RangeProfileCube out;
    out.num_rx = cube.num_rx;
    out.chirps = d;  // now indexed by Doppler bin, zero centered
    out.bins = cube.bins;
    out.range_resolution_m = cube.range_resolution_m;
    out.values.resize(cube.values.size());

    const std::ptrdiff_t lanes = static_cast<std::ptrdiff_t>(cube.num_rx * cube.bins);
#pragma omp parallel
    {
        std::vector<std::complex<double>> buf(d);
#pragma omp for schedule(static)
        for (std::ptrdiff_t lane = 0; lane < lanes; ++lane) {
            const std::size_t rx = static_cast<std::size_t>(lane) / cube.bins;
            const std::size_t bin = static_cast<std::size_t>(lane) % cube.bins;
            for (std::size_t m = 0; m < d; ++m) buf[m] = cube.at(rx, m, bin) * window[m];
            fft.forward(buf.data());
            kernels::fft_shift(buf.data(), d);
            for (std::size_t m = 0; m < d; ++m) out.at(rx, m, bin) = buf[m];
        }
    }
    return out;
}

MagnitudeImage doppler_fft(const RangeProfileCube& cube) {
    const RangeProfileCube spec = doppler_spectrum(cube);
    MagnitudeImage image;
    image.rows = spec.bins;
    image.cols = spec.chirps;
    image.values.assign(image.rows * image.cols, 0.0);
    const double inv_rx = 1.0 / static_cast<double>(spec.num_rx);
    for (std::size_t rx = 0; rx < spec.num_rx; ++rx)
        for (std::size_t dbin = 0; dbin < spec.chirps; ++dbin)
            for (std::size_t rbin = 0; rbin < spec.bins; ++rbin)
                image.at(rbin, dbin) += std::abs(spec.at(rx, dbin, rbin)) * inv_rx;
    return image;
}

void minmax_normalize(MagnitudeImage& image) {
    double lo = image.values.empty() ? 0.0 : image.values[0];
    double hi = lo;
    for (double v : image.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) {
        for (double& v : image.values) v = 0.0;
    } else {
        const double inv = 1.0 / (hi - lo);
        for (double& v : image.values) v = (v - lo) * inv;
    }
    image.norm = ImageNorm::per_image_minmax;
}

RangeDopplerImage Preprocessor::build_rdi(const RawFrame& frame) const {
    const RangeProfileCube profiles = range_fft(frame, radar);
    const RangeProfileCube moving = mti_filter(profiles);
    MagnitudeImage image = doppler_fft(moving);
    minmax_normalize(image);
    if (enhancement) enhancement(image);
    return image;
}

MicroRangeDopplerImage Preprocessor::build_micro_rdi(std::span<const RawFrame> frames) const {
    require(frames.size() == kStackedFrames, ErrorCategory::data,
            strfmt("micro-RDI needs exactly %zu frames, got %zu", kStackedFrames, frames.size()));

    RangeProfileCube stacked;
    stacked.num_rx = radar.num_rx;
    stacked.chirps = kStackedFrames * radar.chirps_per_frame;
    stacked.bins = radar.range_bins();
    stacked.range_resolution_m = radar.range_bin_width();
    stacked.values.resize(stacked.num_rx * stacked.chirps * stacked.bins);

    for (std::size_t f = 0; f < frames.size(); ++f) {
        require(frames[f].num_rx == radar.num_rx && frames[f].chirps == radar.chirps_per_frame &&
                    frames[f].samples == radar.samples_per_chirp,
                ErrorCategory::data, "stacked frame shape mismatch");
        const RangeProfileCube cube = range_fft(frames[f], radar);
        for (std::size_t rx = 0; rx < cube.num_rx; ++rx)
            for (std::size_t m = 0; m < cube.chirps; ++m)
                for (std::size_t bin = 0; bin < cube.bins; ++bin)
                    stacked.at(rx, f * radar.chirps_per_frame + m, bin) = cube.at(rx, m, bin);
    }

    const RangeProfileCube centered = mti_filter(stacked);
    const RangeProfileCube filtered = sinc_lowpass(centered, sinc_cutoff, sinc_taps);
    MagnitudeImage image = doppler_fft(filtered);
    minmax_normalize(image);
    if (enhancement) enhancement(image);
    return image;
}

}  // namespace fare
