#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace mblz {

// Snapshot layout, all integers and floats little-endian:
//   bytes 0..7   magic "MBLZSNAP"
//   uint32       format version (1)
//   uint32       nx
//   uint32       ny
//   float64[4 * nx * ny]  row-major over (iy, ix), interleaved
//                          Re psi_x, Im psi_x, Re psi_y, Im psi_y
inline constexpr char snapshot_magic[8] = {'M', 'B', 'L', 'Z', 'S', 'N', 'A', 'P'};
inline constexpr std::uint32_t snapshot_version = 1;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (std::size_t b = 0; b < sizeof bits; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

template <class T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = 0;
    for (std::size_t b = 0; b < sizeof bits; ++b) bits |= static_cast<U>(p[b]) << (8 * b);
    T v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const SpinorField& f) {
    if (f.nx() <= 0 || f.ny() <= 0) throw FormatError("snapshot: zero-size lattice");
    std::vector<unsigned char> out(snapshot_magic, snapshot_magic + 8);
    out.reserve(20 + 32 * f.sites());
    detail::put_le<std::uint32_t>(out, snapshot_version);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.nx()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.ny()));
    for (std::size_t i = 0; i < f.sites(); ++i) {
        detail::put_le<double>(out, f.psi_x[i].real());
        detail::put_le<double>(out, f.psi_x[i].imag());
        detail::put_le<double>(out, f.psi_y[i].real());
        detail::put_le<double>(out, f.psi_y[i].imag());
    }
    return out;
}

inline SpinorField decode_snapshot(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 20) throw FormatError("snapshot: truncated header");
    if (std::memcmp(bytes.data(), snapshot_magic, 8) != 0) throw FormatError("snapshot: bad magic");
    const auto version = detail::get_le<std::uint32_t>(bytes.data() + 8);
    if (version != snapshot_version) throw FormatError("snapshot: unsupported version " + std::to_string(version));
    const auto nx = detail::get_le<std::uint32_t>(bytes.data() + 12);
    const auto ny = detail::get_le<std::uint32_t>(bytes.data() + 16);
    if (nx == 0 || ny == 0) throw FormatError("snapshot: zero-size lattice");
    const std::size_t sites = static_cast<std::size_t>(nx) * ny;
    if (bytes.size() != 20 + 32 * sites) throw FormatError("snapshot: truncated or oversized payload");
    SpinorField f(static_cast<int>(nx), static_cast<int>(ny));
    const unsigned char* p = bytes.data() + 20;
    for (std::size_t i = 0; i < sites; ++i, p += 32) {
        f.psi_x[i] = {detail::get_le<double>(p), detail::get_le<double>(p + 8)};
        f.psi_y[i] = {detail::get_le<double>(p + 16), detail::get_le<double>(p + 24)};
    }
    return f;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed: " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_snapshot(const SpinorField& f, const std::filesystem::path& path) { write_bytes(path, encode_snapshot(f)); }

inline SpinorField read_snapshot(const std::filesystem::path& path) { return decode_snapshot(read_bytes(path)); }

}  // namespace mblz
