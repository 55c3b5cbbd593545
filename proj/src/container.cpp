#include "fare/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace fare {

namespace {

constexpr char kMagic[4] = {'F', 'A', 'R', 'E'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    require(in.gcount() == 4, ErrorCategory::format, strfmt("truncated container: missing %s", what));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

float get_f32(std::istream& in, const char* what) {
    return std::bit_cast<float>(get_u32(in, what));
}

void put_f64(std::ostream& out, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    put_u32(out, static_cast<std::uint32_t>(u & 0xffffffffULL));
    put_u32(out, static_cast<std::uint32_t>(u >> 32));
}

double get_f64(std::istream& in, const char* what) {
    const std::uint64_t lo = get_u32(in, what);
    const std::uint64_t hi = get_u32(in, what);
    return std::bit_cast<double>(lo | (hi << 32));
}

}  // namespace

std::size_t ContainerArray::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) {
        require(d == 0 || n <= std::numeric_limits<std::size_t>::max() / d, ErrorCategory::format,
                "container dimension overflow");
        n *= d;
    }
    return n;
}

std::size_t ContainerArray::payload_scalars() const {
    const std::size_t n = element_count();
    switch (dtype) {
        case Dtype::f32: return n;
        case Dtype::f64: return n;
        case Dtype::c64: return 2 * n;
    }
    throw FareError(ErrorCategory::format, "unknown container dtype");
}

ContainerArray ContainerArray::from_f64(std::vector<std::uint32_t> dims, std::vector<double> values) {
    ContainerArray a;
    a.dtype = Dtype::f64;
    a.dims = std::move(dims);
    a.f64 = std::move(values);
    require(a.f64.size() == a.element_count(), ErrorCategory::data,
            "container payload does not match dims");
    return a;
}

ContainerArray ContainerArray::from_f32(std::vector<std::uint32_t> dims, std::vector<float> values) {
    ContainerArray a;
    a.dtype = Dtype::f32;
    a.dims = std::move(dims);
    a.f32 = std::move(values);
    require(a.f32.size() == a.element_count(), ErrorCategory::data,
            "container payload does not match dims");
    return a;
}

ContainerArray ContainerArray::from_c64(std::vector<std::uint32_t> dims,
                                        const std::vector<std::complex<double>>& values) {
    ContainerArray a;
    a.dtype = Dtype::c64;
    a.dims = std::move(dims);
    a.f32.resize(2 * values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        a.f32[2 * i] = static_cast<float>(values[i].real());
        a.f32[2 * i + 1] = static_cast<float>(values[i].imag());
    }
    require(values.size() == a.element_count(), ErrorCategory::data,
            "container payload does not match dims");
    return a;
}

std::vector<std::complex<double>> ContainerArray::to_complex() const {
    require(dtype == Dtype::c64, ErrorCategory::format, "container is not complex64");
    std::vector<std::complex<double>> out(element_count());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {static_cast<double>(f32[2 * i]), static_cast<double>(f32[2 * i + 1])};
    return out;
}

std::vector<double> ContainerArray::to_f64() const {
    if (dtype == Dtype::f64) return f64;
    require(dtype == Dtype::f32, ErrorCategory::format, "container holds complex data");
    return {f32.begin(), f32.end()};
}

void container_to_stream(std::ostream& out, const ContainerArray& array) {
    require(array.payload_scalars() ==
                (array.dtype == Dtype::f64 ? array.f64.size() : array.f32.size()),
            ErrorCategory::data, "container payload does not match dims");
    out.write(kMagic, 4);
    put_u32(out, kContainerVersion);
    put_u32(out, static_cast<std::uint32_t>(array.dtype));
    put_u32(out, static_cast<std::uint32_t>(array.dims.size()));
    for (std::uint32_t d : array.dims) put_u32(out, d);
    if (array.dtype == Dtype::f64) {
        for (double v : array.f64) put_f64(out, v);
    } else {
        for (float v : array.f32) put_f32(out, v);
    }
}

ContainerArray container_from_stream(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    require(in.gcount() == 4, ErrorCategory::format, "truncated container: missing magic");
    require(std::memcmp(magic, kMagic, 4) == 0, ErrorCategory::format,
            strfmt("bad container magic '%c%c%c%c'", magic[0], magic[1], magic[2], magic[3]));
    const std::uint32_t version = get_u32(in, "version");
    require(version == kContainerVersion, ErrorCategory::format,
            strfmt("unsupported container version %u", version));
    const std::uint32_t dtype_code = get_u32(in, "dtype");
    require(dtype_code >= 1 && dtype_code <= 3, ErrorCategory::format,
            strfmt("unknown container dtype code %u", dtype_code));
    ContainerArray a;
    a.dtype = static_cast<Dtype>(dtype_code);
    const std::uint32_t ndim = get_u32(in, "ndim");
    require(ndim <= 16, ErrorCategory::format, "container rank too large");
    a.dims.resize(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) a.dims[i] = get_u32(in, "dims");
    const std::size_t scalars = a.payload_scalars();
    if (a.dtype == Dtype::f64) {
        a.f64.resize(scalars);
        for (std::size_t i = 0; i < scalars; ++i) a.f64[i] = get_f64(in, "payload");
    } else {
        a.f32.resize(scalars);
        for (std::size_t i = 0; i < scalars; ++i) a.f32[i] = get_f32(in, "payload");
    }
    return a;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorCategory::io, "cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        require(out.good(), ErrorCategory::io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorCategory::io,
            strfmt("rename %s -> %s failed: %s", tmp.string().c_str(), path.string().c_str(),
                   ec.message().c_str()));
}

void write_container(const std::filesystem::path& path, const ContainerArray& array) {
    std::ostringstream buf(std::ios::binary);
    container_to_stream(buf, array);
    atomic_write_file(path, buf.str());
}

ContainerArray read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open container: " + path.string());
    ContainerArray a = container_from_stream(in);
    // A standalone container file must end exactly after its payload.
    in.peek();
    require(in.eof(), ErrorCategory::format,
            "container file longer than its header declares: " + path.string());
    return a;
}

}  // namespace fare
