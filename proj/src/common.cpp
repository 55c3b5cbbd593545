#include "fare/common.hpp"

namespace fare {

const char* error_category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::config: return "config";
        case ErrorCategory::io: return "io";
        case ErrorCategory::format: return "format";
        case ErrorCategory::state: return "state";
        case ErrorCategory::data: return "data";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

std::string strfmt(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list args2;
    va_copy(args2, args);
    const int n = std::vsnprintf(nullptr, 0, fmt, args);
    va_end(args);
    std::string out(n > 0 ? static_cast<std::size_t>(n) : 0, '\0');
    if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args2);
    va_end(args2);
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    Rng rng(seed ^ 0x51ab9f6e2c3d4e5fULL);
    std::uint64_t s = rng.next_u64();
    s ^= a * 0x9e3779b97f4a7c15ULL;
    Rng ra(s);
    s = ra.next_u64() ^ (b * 0xc2b2ae3d27d4eb4fULL);
    Rng rb(s);
    s = rb.next_u64() ^ (c * 0x165667b19e3779f9ULL);
    Rng rc(s);
    return rc.next_u64();
}

bool all_finite(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace fare
