#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Thin wrappers over OpenSSL libcrypto.
namespace market::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);
Digest hmac_sha256(std::string_view key, std::string_view data);
std::vector<std::uint8_t> pbkdf2_sha256(std::string_view password,
                                        std::span<const std::uint8_t> salt,
                                        unsigned iterations, std::size_t length);

std::string to_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

// RFC 4648 base64url, unpadded.
std::string base64url_encode(std::span<const std::uint8_t> data);
std::string base64url_encode(std::string_view data);
// Strict: rejects padding, characters outside the alphabet, impossible
// lengths and non-canonical trailing bits, so every byte string has exactly
// one accepted encoding.
std::optional<std::vector<std::uint8_t>> base64url_decode(std::string_view text);

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace market::crypto
