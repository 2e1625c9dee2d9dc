#include "lwf/crypto.hpp"

#include "lwf/error.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <array>
#include <vector>

namespace lwf::crypto {

namespace {

constexpr int kPbkdf2Iterations = 60000;

std::string to_hex(const unsigned char* data, std::size_t n) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out += kDigits[data[i] >> 4];
        out += kDigits[data[i] & 0x0F];
    }
    return out;
}

std::vector<unsigned char> from_hex(std::string_view hex) {
    const auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<unsigned char> out;
    if (hex.size() % 2) return out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return {};
        out.push_back(static_cast<unsigned char>(hi << 4 | lo));
    }
    return out;
}

std::vector<unsigned char> pbkdf2(std::string_view password, const std::vector<unsigned char>& salt, int iterations) {
    std::vector<unsigned char> out(32);
    if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                          static_cast<int>(salt.size()), iterations, EVP_sha256(),
                          static_cast<int>(out.size()), out.data()) != 1) {
        fail(ErrorCode::Io, "PBKDF2 derivation failed");
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    return to_hex(digest.data(), digest.size());
}

std::string base64_encode(std::string_view data) {
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(data.data()),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string random_hex(std::size_t bytes) {
    std::vector<unsigned char> buf(bytes);
    if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) fail(ErrorCode::Io, "RAND_bytes failed");
    return to_hex(buf.data(), buf.size());
}

std::string hash_password(std::string_view password) {
    std::vector<unsigned char> salt(16);
    if (RAND_bytes(salt.data(), static_cast<int>(salt.size())) != 1) fail(ErrorCode::Io, "RAND_bytes failed");
    const auto derived = pbkdf2(password, salt, kPbkdf2Iterations);
    return "pbkdf2-sha256$" + std::to_string(kPbkdf2Iterations) + "$" + to_hex(salt.data(), salt.size()) + "$" +
           to_hex(derived.data(), derived.size());
}

bool verify_password(std::string_view password, std::string_view encoded) {
    // scheme$iterations$salt$hash
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::size_t end = i == 3 ? encoded.size() : encoded.find('$', start);
        if (end == std::string_view::npos) return false;
        fields[i] = encoded.substr(start, end - start);
        start = end + 1;
    }
    if (fields[0] != "pbkdf2-sha256") return false;
    int iterations = 0;
    try {
        iterations = std::stoi(std::string(fields[1]));
    } catch (const std::exception&) {
        return false;
    }
    const auto salt = from_hex(fields[2]);
    const auto expected = from_hex(fields[3]);
    if (iterations <= 0 || salt.empty() || expected.size() != 32) return false;
    const auto derived = pbkdf2(password, salt, iterations);
    return CRYPTO_memcmp(derived.data(), expected.data(), expected.size()) == 0;
}

}  // namespace lwf::crypto
