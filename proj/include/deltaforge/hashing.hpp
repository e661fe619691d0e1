#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace deltaforge {

std::array<std::uint8_t, 32> sha256(std::string_view bytes);
std::string sha256_hex(std::string_view bytes);

/// RFC 4122 version-4 layout filled from a hash of `seed` and `sequence`.
std::string derived_uuid(std::string_view seed, std::uint64_t sequence);

}  // namespace deltaforge
