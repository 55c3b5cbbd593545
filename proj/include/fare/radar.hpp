#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "fare/common.hpp"

namespace fare {

// FMCW chirp-sequence radar parameters. Chirps are spaced uniformly over the
// frame period, so slow-time sampling stays uniform when frames are stacked
// for the micro range-Doppler image.
struct RadarConfig {
    double carrier_freq_hz = 60e9;
    double bandwidth_hz = 5e9;
    std::size_t samples_per_chirp = 64;
    std::size_t chirps_per_frame = 64;
    double chirp_duration_s = 32e-6;
    double frame_period_s = 0.05;
    double adc_rate_hz = 2e6;
    std::size_t num_rx = 3;
    double noise_std = 0.3;  // per-component std of the complex noise

    double wavelength() const { return kSpeedOfLight / carrier_freq_hz; }
    double chirp_interval_s() const {
        return frame_period_s / static_cast<double>(chirps_per_frame);
    }
    // Beat frequency for a target at range r.
    double beat_freq(double range_m) const {
        return 2.0 * bandwidth_hz * range_m / (kSpeedOfLight * chirp_duration_s);
    }
    // Largest range whose beat frequency stays below Nyquist.
    double max_unambiguous_range() const {
        return adc_rate_hz / 2.0 * kSpeedOfLight * chirp_duration_s / (2.0 * bandwidth_hz);
    }
    std::size_t range_bins() const { return samples_per_chirp / 2; }
    // Meters per range-FFT bin.
    double range_bin_width() const {
        return (adc_rate_hz / static_cast<double>(samples_per_chirp)) * kSpeedOfLight *
               chirp_duration_s / (2.0 * bandwidth_hz);
    }
    // Doppler-FFT bin width in Hz for one frame of chirps.
    double doppler_bin_width_hz() const {
        return 1.0 / (chirp_interval_s() * static_cast<double>(chirps_per_frame));
    }

    void validate() const;
};

struct Scatterer {
    double range_m = 0.25;
    double rcs = 1.0;  // linear amplitude
    double vib_freq_hz = 0.0;
    double vib_amp_m = 0.0;
    double drift_vel_mps = 0.0;
};

struct ScatterProfile {
    int identity_id = 0;
    std::vector<Scatterer> scatterers;

    void validate(const RadarConfig& cfg) const;
};

struct RawFrame {
    std::size_t num_rx = 0;
    std::size_t chirps = 0;
    std::size_t samples = 0;
    std::size_t frame_index = 0;
    std::vector<std::complex<double>> data;  // [rx][chirp][sample]

    std::complex<double>& at(std::size_t rx, std::size_t chirp, std::size_t sample) {
        return data[(rx * chirps + chirp) * samples + sample];
    }
    const std::complex<double>& at(std::size_t rx, std::size_t chirp, std::size_t sample) const {
        return data[(rx * chirps + chirp) * samples + sample];
    }
};

// Synthesizes the IF signal for one frame: each scatterer contributes a fast-
// time tone at its beat frequency and a slow-time phase of 4*pi*r/lambda,
// with range modulated by vibration and drift; complex white Gaussian noise
// on top. Pure function of its arguments.
RawFrame simulate_if_frame(const ScatterProfile& profile, const RadarConfig& cfg,
                           std::size_t frame_index, std::uint64_t seed);

// Deterministic identity: 3..6 scatterers near 0.25 m whose vibration
// frequencies come from a disjoint band per id_index.
ScatterProfile make_identity_profile(int id_index, std::uint64_t seed);

// Vibration frequency band assigned to an identity index.
void identity_vibration_band(int id_index, double& lo_hz, double& hi_hz);

}  // namespace fare
