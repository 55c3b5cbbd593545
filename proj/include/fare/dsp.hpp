#pragma once

#include <functional>
#include <span>

#include "fare/radar.hpp"

namespace fare {

// Complex range profiles, [rx][chirp][range bin].
struct RangeProfileCube {
    std::size_t num_rx = 0;
    std::size_t chirps = 0;
    std::size_t bins = 0;
    double range_resolution_m = 0.0;
    std::vector<std::complex<double>> values;

    std::complex<double>& at(std::size_t rx, std::size_t chirp, std::size_t bin) {
        return values[(rx * chirps + chirp) * bins + bin];
    }
    const std::complex<double>& at(std::size_t rx, std::size_t chirp, std::size_t bin) const {
        return values[(rx * chirps + chirp) * bins + bin];
    }
};

enum class ImageNorm { raw, per_image_minmax };

// Real magnitude grid, rows = range bins, cols = Doppler bins (zero centered).
struct MagnitudeImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    ImageNorm norm = ImageNorm::raw;
    std::vector<double> values;

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

using RangeDopplerImage = MagnitudeImage;
using MicroRangeDopplerImage = MagnitudeImage;

// Optional in-place image enhancement applied after normalization. The
// default (empty) hook leaves the image untouched.
using EnhancementHook = std::function<void(MagnitudeImage&)>;

// Fast-time mean removal, Hann window, FFT, positive half kept.
RangeProfileCube range_fft(const RawFrame& frame, const RadarConfig& cfg);

// Slow-time mean removal per (rx, range bin): exact null for static returns.
RangeProfileCube mti_filter(const RangeProfileCube& cube);

// Hann-windowed sinc low-pass along slow time, unit DC gain, odd tap count,
// "same" length via reflection about the edge samples.
RangeProfileCube sinc_lowpass(const RangeProfileCube& cube, double cutoff_fraction,
                              std::size_t taps = 9);

// Complex Doppler spectra per rx: slow-time Hann window, FFT, zero centered.
// Kept separate from the magnitude step so linearity is testable.
RangeProfileCube doppler_spectrum(const RangeProfileCube& cube);

// doppler_spectrum -> magnitude -> mean over rx, as [range][doppler].
MagnitudeImage doppler_fft(const RangeProfileCube& cube);

// In-place min-max normalization to [0,1]; an all-constant image maps to zero.
void minmax_normalize(MagnitudeImage& image);

struct Preprocessor {
    RadarConfig radar;
    double sinc_cutoff = 0.25;
    std::size_t sinc_taps = 9;
    EnhancementHook enhancement;  // applied to both image kinds

    // range_fft -> mti -> doppler_fft -> minmax -> hook
    RangeDopplerImage build_rdi(const RawFrame& frame) const;

    // Exactly eight consecutive frames: per-frame range_fft, slow-time
    // concatenation, slow-time mean removal, sinc low-pass, long Doppler FFT.
    MicroRangeDopplerImage build_micro_rdi(std::span<const RawFrame> frames) const;

    static constexpr std::size_t kStackedFrames = 8;
};

// The Hann-windowed normalized sinc kernel used by sinc_lowpass.
std::vector<double> sinc_kernel(double cutoff_fraction, std::size_t taps);

}  // namespace fare
