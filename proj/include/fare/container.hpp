#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "fare/common.hpp"

namespace fare {

// Binary tensor container. Layout, all integers little-endian:
//   magic "FARE" | version u32 | dtype u32 | ndim u32 | dims u32[ndim] | payload
// dtype 1 = float32, 2 = float64, 3 = complex64 (interleaved re/im float32).
// Round trips are bit-exact.

enum class Dtype : std::uint32_t {
    f32 = 1,
    f64 = 2,
    c64 = 3,
};

constexpr std::uint32_t kContainerVersion = 1;

struct ContainerArray {
    Dtype dtype = Dtype::f32;
    std::vector<std::uint32_t> dims;
    std::vector<float> f32;   // payload for f32 (1 per element) and c64 (2 per element)
    std::vector<double> f64;  // payload for f64

    std::size_t element_count() const;
    std::size_t payload_scalars() const;  // floats or doubles stored

    static ContainerArray from_f64(std::vector<std::uint32_t> dims, std::vector<double> values);
    static ContainerArray from_f32(std::vector<std::uint32_t> dims, std::vector<float> values);
    static ContainerArray from_c64(std::vector<std::uint32_t> dims,
                                   const std::vector<std::complex<double>>& values);

    std::vector<std::complex<double>> to_complex() const;
    std::vector<double> to_f64() const;
};

void container_to_stream(std::ostream& out, const ContainerArray& array);
ContainerArray container_from_stream(std::istream& in);

// File writes go through a temp file and rename, so readers never observe a
// partial container.
void write_container(const std::filesystem::path& path, const ContainerArray& array);
ContainerArray read_container(const std::filesystem::path& path);

// Shared atomic-write helper (manifests, metrics files, checkpoints).
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace fare
