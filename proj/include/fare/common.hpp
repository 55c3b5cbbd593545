#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace fare {

// ---------------------------------------------------------------------------
// Errors. Every user-facing failure carries a machine-parsable category that
// the CLI prints as "error: <category>: <message>".
// ---------------------------------------------------------------------------

enum class ErrorCategory {
    usage,    // bad command line
    config,   // bad configuration file / key / value
    io,       // filesystem failures
    format,   // malformed container / checkpoint / manifest
    state,    // missing upstream artifact, wrong checkpoint stage
    data,     // invalid domain data (shapes, ranges, non-finite values)
    numeric,  // non-finite loss/gradient during computation
};

const char* error_category_name(ErrorCategory c);

class FareError : public std::runtime_error {
public:
    FareError(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }
    const char* category_name() const { return error_category_name(category_); }

private:
    ErrorCategory category_;
};

inline void require(bool condition, ErrorCategory category, const std::string& message) {
    if (!condition) throw FareError(category, message);
}

// printf-style std::string builder used for error messages and reports.
std::string strfmt(const char* fmt, ...);

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 core: identical streams on every platform,
// which the end-to-end determinism contract depends on. std::mt19937 would be
// deterministic too, but the std distributions are not pinned by the standard.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(u01() * static_cast<double>(n)) % n;
    }

    // Box-Muller; consumes two uniforms per pair, second value cached.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Derives an independent child seed from (seed, stream tags). Used to give
// every identity / parameter / stage its own RNG stream so results do not
// depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// ---------------------------------------------------------------------------
// Small shared helpers.
// ---------------------------------------------------------------------------

inline bool is_finite(double v) { return std::isfinite(v); }

bool all_finite(const std::vector<double>& values);

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace fare
