#pragma once

#include <string>
#include <string_view>

namespace lwf::crypto {

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);
/// Hex string of `bytes` bytes from the OS CSPRNG.
std::string random_hex(std::size_t bytes);

/// "pbkdf2-sha256$<iterations>$<salt hex>$<hash hex>"
std::string hash_password(std::string_view password);
bool verify_password(std::string_view password, std::string_view encoded);

}  // namespace lwf::crypto
