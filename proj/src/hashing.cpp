#include "deltaforge/hashing.hpp"

#include <openssl/evp.h>

#include <cstdio>

namespace deltaforge {

std::array<std::uint8_t, 32> sha256(std::string_view bytes) {
  std::array<std::uint8_t, 32> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  return md;
}

std::string sha256_hex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (auto b : sha256(bytes)) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 15]);
  }
  return out;
}

std::string derived_uuid(std::string_view seed, std::uint64_t sequence) {
  auto md = sha256(std::string(seed) + ":" + std::to_string(sequence));
  md[6] = static_cast<std::uint8_t>((md[6] & 0x0f) | 0x40);
  md[8] = static_cast<std::uint8_t>((md[8] & 0x3f) | 0x80);
  char buf[37];
  std::snprintf(buf, sizeof(buf),
                "%02x%02x%02x%02x-%02x%02x-%02x%02x-%02x%02x-%02x%02x%02x%02x%02x%02x", md[0],
                md[1], md[2], md[3], md[4], md[5], md[6], md[7], md[8], md[9], md[10], md[11],
                md[12], md[13], md[14], md[15]);
  return buf;
}

}  // namespace deltaforge
