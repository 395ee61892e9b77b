#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cane {

// Error classes are distinct so callers can react differently: a not-found
// block may be refetched from the network tier, a corrupt one must not.
enum class Err {
    not_found,
    corruption,
    oversized,
    io,
    bad_name,
    bad_stamp,
    wrong_type,
    no_history,
    bad_window,
    missing_key,
    dep_cycle,
    missing_platform,
    fetch_failed,
    bad_spec,
    bad_scene,
    no_target,
    access_denied,
    bad_encoding,
};

class CaneError : public std::runtime_error {
public:
    CaneError(Err kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Err kind() const { return kind_; }

private:
    Err kind_;
};

[[noreturn]] inline void fail(Err kind, const std::string& what) {
    throw CaneError(kind, what);
}

enum class HashAlg : std::uint8_t { sha512 = 0 };

constexpr std::size_t kDigestBytes = 64;  // 512-bit digests

// Universal address of immutable bytes.
struct BlockId {
    std::array<std::uint8_t, kDigestBytes> digest{};
    HashAlg alg = HashAlg::sha512;

    auto operator<=>(const BlockId&) const = default;

    bool is_zero() const {
        for (auto b : digest)
            if (b != 0) return false;
        return true;
    }

    std::string hex() const;
    static BlockId from_hex(std::string_view hex);
};

struct BlockIdHash {
    std::size_t operator()(const BlockId& id) const {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i)
            h = (h << 8) | id.digest[i];
        return h;
    }
};

// SHA-512 of bytes as a BlockId.
BlockId hash_bytes(std::string_view bytes);

std::string to_hex(const std::uint8_t* data, std::size_t len);
}  // namespace cane
