#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "uhd/inverted_index.hpp"

namespace uhd {

inline constexpr std::uint32_t kIndexVersion = 1;

/// CRC-64/XZ (ECMA-182 polynomial, reflected, all-ones init and xorout).
std::uint64_t crc64_xz(std::string_view bytes);

/// UHDI: "UHDI", u32 version, u32 bucket count, doc table (u32 count, then
/// length-prefixed ids), per bucket the descriptor (u32 layer, u32 aspect,
/// u32 n, f32 weight), u32 dim count and per dim u32 dim id, u32 posting
/// count and (u32 ordinal, f32 weight) pairs; trailing u64 CRC-64/XZ of
/// every preceding byte.
std::string serialize_index(const InvertedIndex& index);
InvertedIndex deserialize_index(std::string_view bytes, const std::string& context = "index");

void write_index(const InvertedIndex& index, const std::string& path);
InvertedIndex read_index(const std::string& path);

}  // namespace uhd
