#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cane/types.hpp"

namespace cane {

enum class SigAlg : std::uint8_t { ed25519 = 0 };

// A public key is a digital address; nothing else is consulted.
struct PublicKey {
    std::vector<std::uint8_t> bytes;
    SigAlg alg = SigAlg::ed25519;

    auto operator<=>(const PublicKey&) const = default;
    std::string hex() const { return to_hex(bytes.data(), bytes.size()); }
};

struct Identity {
    PublicKey pub;
    std::optional<std::vector<std::uint8_t>> secret;  // signing seed, owned ids only

    bool can_sign() const { return secret.has_value(); }
};

// Fresh keypair; no registry or authority involved. A fixed seed gives a
// deterministic identity (test mode).
Identity generate_identity(std::optional<std::string_view> seed = std::nullopt);

Identity identity_from_secret(std::span<const std::uint8_t> secret);

std::vector<std::uint8_t> sign_bytes(const Identity& id, std::string_view bytes);
bool verify_bytes(const PublicKey& key, std::string_view bytes,
                  std::span<const std::uint8_t> signature);

unsigned security_bits(const Identity& id);

struct SignedManifest {
    BlockId manifest;
    PublicKey signer;
    std::vector<std::uint8_t> signature;  // over the manifest digest bytes

    std::string encode() const;
    static SignedManifest decode(std::string_view bytes);
};

SignedManifest sign_manifest(const Identity& id, const BlockId& manifest);
bool verify_manifest(const SignedManifest& sm);

// Time-windowed, signed group-membership assertion. Expiry is the only
// revocation mechanism.
struct Certificate {
    PublicKey group;
    PublicKey member;
    std::int64_t valid_from_us = 0;
    std::int64_t valid_to_us = 0;
    std::vector<std::uint8_t> signature;

    std::string to_be_signed() const;
    std::string encode() const;
    static Certificate decode(std::string_view bytes);
};

Certificate issue_certificate(const Identity& group, const PublicKey& member,
                              std::int64_t valid_from_us,
                              std::int64_t valid_to_us);
bool verify_certificate(const Certificate& cert);

// Empty readers means world-readable; groups are just virtual people.
struct Acl {
    std::vector<PublicKey> readers;
    std::vector<PublicKey> writers;

    std::string encode() const;
    static Acl decode(std::string_view bytes);
};

enum class AccessMode { read, write };
enum class DenyReason { none, not_listed, cert_expired, cert_invalid, bad_evidence };

struct AccessDecision {
    bool allowed = false;
    DenyReason reason = DenyReason::none;
};

std::string_view deny_reason_name(DenyReason reason);

// Trust comes from keys alone: a requester is allowed if listed directly or
// if it holds a valid in-window certificate from a listed group. There is no
// network-locality input by construction.
AccessDecision check_access(const Acl& acl, const PublicKey& requester,
                            std::span<const Certificate> certs,
                            const std::optional<SignedManifest>& evidence,
                            AccessMode mode, std::int64_t now_us);

}  // namespace cane
