#include "fare/radar.hpp"

#include <cmath>

namespace fare {

namespace {

constexpr std::uint64_t kStreamProfile = 1;
constexpr std::uint64_t kStreamVibPhase = 2;
constexpr std::uint64_t kStreamFrameNoise = 3;

bool power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void RadarConfig::validate() const {
    require(bandwidth_hz > 0 && carrier_freq_hz > 0, ErrorCategory::config,
            "carrier frequency and bandwidth must be positive");
    require(num_rx >= 1, ErrorCategory::config, "num_rx must be >= 1");
    require(power_of_two(samples_per_chirp) && power_of_two(chirps_per_frame),
            ErrorCategory::config, "samples_per_chirp and chirps_per_frame must be powers of two");
    require(adc_rate_hz > 0 && chirp_duration_s > 0 && frame_period_s > 0, ErrorCategory::config,
            "adc rate, chirp duration and frame period must be positive");
    const double expected = adc_rate_hz * chirp_duration_s;
    require(std::fabs(expected - static_cast<double>(samples_per_chirp)) < 0.5,
            ErrorCategory::config,
            strfmt("samples_per_chirp (%zu) must equal adc_rate * chirp_duration (%.3f)",
                   samples_per_chirp, expected));
    require(frame_period_s >= chirp_duration_s * static_cast<double>(chirps_per_frame),
            ErrorCategory::config, "frame period shorter than the chirp burst");
    require(noise_std >= 0 && std::isfinite(noise_std), ErrorCategory::config,
            "noise_std must be finite and >= 0");
}

void ScatterProfile::validate(const RadarConfig& cfg) const {
    const double rmax = cfg.max_unambiguous_range();
    for (const Scatterer& s : scatterers) {
        require(std::isfinite(s.range_m) && std::isfinite(s.rcs) && std::isfinite(s.vib_freq_hz) &&
                    std::isfinite(s.vib_amp_m) && std::isfinite(s.drift_vel_mps),
                ErrorCategory::data, "scatterer parameters must be finite");
        require(s.range_m > 0 && s.range_m < rmax, ErrorCategory::data,
                strfmt("scatterer range %.3f m outside (0, %.3f) m", s.range_m, rmax));
        require(s.vib_amp_m >= 0, ErrorCategory::data, "vibration amplitude must be >= 0");
        require(s.rcs > 0, ErrorCategory::data, "rcs must be > 0");
    }
}

RawFrame simulate_if_frame(const ScatterProfile& profile, const RadarConfig& cfg,
                           std::size_t frame_index, std::uint64_t seed) {
    cfg.validate();
    profile.validate(cfg);

    const std::size_t n_samples = cfg.samples_per_chirp;
    const std::size_t n_chirps = cfg.chirps_per_frame;
    RawFrame frame;
    frame.num_rx = cfg.num_rx;
    frame.chirps = n_chirps;
    frame.samples = n_samples;
    frame.frame_index = frame_index;
    frame.data.assign(cfg.num_rx * n_chirps * n_samples, {0.0, 0.0});

    // Vibration phases are per scatterer and frame-independent, so motion is
    // continuous across stacked frames.
    std::vector<double> vib_phase(profile.scatterers.size());
    for (std::size_t si = 0; si < profile.scatterers.size(); ++si) {
        Rng rng(derive_seed(seed, kStreamVibPhase, si));
        vib_phase[si] = 2.0 * kPi * rng.u01();
    }

    const double lambda = cfg.wavelength();
    const double fs = cfg.adc_rate_hz;
    const double rmax = cfg.max_unambiguous_range();

    // Signal is common to all rx channels; noise is drawn independently.
    std::vector<std::complex<double>> signal(n_chirps * n_samples, {0.0, 0.0});
    for (std::size_t m = 0; m < n_chirps; ++m) {
        const double t0 = static_cast<double>(frame_index) * cfg.frame_period_s +
                          static_cast<double>(m) * cfg.chirp_interval_s();
        std::complex<double>* row = signal.data() + m * n_samples;
        for (std::size_t si = 0; si < profile.scatterers.size(); ++si) {
            const Scatterer& s = profile.scatterers[si];
            const double r = s.range_m +
                             s.vib_amp_m * std::sin(2.0 * kPi * s.vib_freq_hz * t0 + vib_phase[si]) +
                             s.drift_vel_mps * t0;
            require(r > 0 && r < rmax, ErrorCategory::data,
                    strfmt("scatterer drifted to %.4f m, outside (0, %.4f) m", r, rmax));
            const double fb = cfg.beat_freq(r);
            const double phase0 = 4.0 * kPi * r / lambda;
            std::complex<double> z = s.rcs * std::complex<double>(std::cos(phase0), std::sin(phase0));
            const double dphi = 2.0 * kPi * fb / fs;
            const std::complex<double> w(std::cos(dphi), std::sin(dphi));
            for (std::size_t n = 0; n < n_samples; ++n) {
                row[n] += z;
                z *= w;
            }
        }
    }

    for (std::size_t rx = 0; rx < cfg.num_rx; ++rx) {
        Rng noise(derive_seed(seed, kStreamFrameNoise, frame_index, rx));
        std::complex<double>* dst = frame.data.data() + rx * n_chirps * n_samples;
        for (std::size_t i = 0; i < n_chirps * n_samples; ++i) {
            dst[i] = signal[i];
            if (cfg.noise_std > 0.0) {
                const double re = noise.gaussian() * cfg.noise_std;
                const double im = noise.gaussian() * cfg.noise_std;
                dst[i] += std::complex<double>(re, im);
            }
        }
    }
    return frame;
}

void identity_vibration_band(int id_index, double& lo_hz, double& hi_hz) {
    lo_hz = 4.0 + 3.0 * static_cast<double>(id_index);
    hi_hz = lo_hz + 2.0;
}

ScatterProfile make_identity_profile(int id_index, std::uint64_t seed) {
    require(id_index >= 0, ErrorCategory::data, "id_index must be >= 0");
    Rng rng(derive_seed(seed, kStreamProfile, static_cast<std::uint64_t>(id_index)));

    double band_lo = 0.0, band_hi = 0.0;
    identity_vibration_band(id_index, band_lo, band_hi);

    ScatterProfile profile;
    profile.identity_id = id_index;
    const std::size_t count = 3 + rng.index(4);
    profile.scatterers.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        Scatterer sc;
        sc.range_m = 0.25 + rng.uniform(-0.07, 0.09);
        sc.rcs = rng.uniform(0.5, 1.5);
        sc.vib_freq_hz = rng.uniform(band_lo, band_hi);
        sc.vib_amp_m = rng.uniform(0.0007, 0.0013);
        sc.drift_vel_mps = rng.uniform(-0.0005, 0.0005);
        profile.scatterers.push_back(sc);
    }
    return profile;
}

}  // namespace fare
