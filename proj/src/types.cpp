#include "cane/types.hpp"

#include <openssl/sha.h>

namespace cane {

static constexpr char kHexDigits[] = "0123456789abcdef";

std::string to_hex(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(kHexDigits[data[i] >> 4]);
        out.push_back(kHexDigits[data[i] & 0xf]);
    }
    return out;
}

std::string BlockId::hex() const {
    return to_hex(digest.data(), digest.size());
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

BlockId BlockId::from_hex(std::string_view hex) {
    if (hex.size() != kDigestBytes * 2)
        fail(Err::bad_encoding, "block id hex must be 128 characters");
    BlockId id;
    for (std::size_t i = 0; i < kDigestBytes; ++i) {
        int hi = hex_val(hex[2 * i]);
        int lo = hex_val(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) fail(Err::bad_encoding, "invalid hex digit in block id");
        id.digest[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return id;
}

BlockId hash_bytes(std::string_view bytes) {
    BlockId id;
    SHA512(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
           id.digest.data());
    return id;
}

}  // namespace cane
