#pragma once

// Little-endian primitive readers/writers shared by the model containers.

#include "esnt/tensor.hpp"

#include <fmt/format.h>

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string_view>

namespace esnt::detail {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

inline void write_magic(std::ostream& os, std::string_view magic)
{
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void read_magic(std::istream& is, std::string_view magic)
{
    std::array<char, 16> buf{};
    is.read(buf.data(), static_cast<std::streamsize>(magic.size()));
    if (!is || std::string_view(buf.data(), magic.size()) != magic) {
        throw std::runtime_error(fmt::format("bad container header, expected '{}'", magic));
    }
}

template <typename T>
void write_pod(std::ostream& os, T value)
{
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is)
{
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) {
        throw std::runtime_error("truncated container");
    }
    return value;
}

inline void write_matrix(std::ostream& os, const Matrix& m)
{
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

inline Matrix read_matrix(std::istream& is)
{
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    constexpr std::uint64_t limit = std::uint64_t{1} << 32;
    if (rows > limit || cols > limit || rows * cols > limit) {
        throw std::runtime_error(fmt::format("implausible matrix dims {}x{} in container", rows, cols));
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!is) {
        throw std::runtime_error("truncated container");
    }
    return m;
}

}  // namespace esnt::detail
