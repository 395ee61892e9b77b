#include "cane/identity.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <algorithm>
#include <memory>

namespace cane {

namespace {

constexpr std::size_t kSeedBytes = 32;
constexpr std::uint8_t kCertMagic = 0xCE;
constexpr std::uint8_t kCertVersion = 0x01;
constexpr std::uint8_t kSignedManifestMagic = 0xC5;
constexpr std::uint8_t kSignedManifestVersion = 0x01;

using PkeyPtr = std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)>;
using CtxPtr = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

PkeyPtr private_key(std::span<const std::uint8_t> seed) {
    EVP_PKEY* pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                  seed.data(), seed.size());
    if (!pkey) fail(Err::io, "ed25519 key construction failed");
    return {pkey, EVP_PKEY_free};
}

PkeyPtr public_key(const PublicKey& key) {
    EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                                 key.bytes.data(),
                                                 key.bytes.size());
    if (!pkey) fail(Err::io, "ed25519 public key construction failed");
    return {pkey, EVP_PKEY_free};
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<char>((v >> shift) & 0xff));
}

void put_blob(std::string& out, std::span<const std::uint8_t> bytes) {
    put_u16(out, static_cast<std::uint16_t>(bytes.size()));
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

struct Reader {
    std::string_view bytes;
    std::size_t pos = 0;

    void need(std::size_t n) {
        if (bytes.size() - pos < n) fail(Err::bad_encoding, "truncated encoding");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16() {
        std::uint16_t hi = u8();
        return static_cast<std::uint16_t>((hi << 8) | u8());
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
        return v;
    }
    std::vector<std::uint8_t> blob() {
        std::size_t n = u16();
        need(n);
        std::vector<std::uint8_t> out(bytes.begin() + pos, bytes.begin() + pos + n);
        pos += n;
        return out;
    }
    BlockId digest() {
        need(kDigestBytes);
        BlockId id;
        std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data()) + pos,
                    kDigestBytes, id.digest.begin());
        pos += kDigestBytes;
        return id;
    }
    void expect_done() {
        if (pos != bytes.size()) fail(Err::bad_encoding, "trailing bytes");
    }
};

}  // namespace

Identity identity_from_secret(std::span<const std::uint8_t> secret) {
    if (secret.size() != kSeedBytes)
        fail(Err::bad_encoding, "signing secret must be 32 bytes");
    PkeyPtr pkey = private_key(secret);
    Identity id;
    id.secret = std::vector<std::uint8_t>(secret.begin(), secret.end());
    std::size_t len = 0;
    EVP_PKEY_get_raw_public_key(pkey.get(), nullptr, &len);
    id.pub.bytes.resize(len);
    if (EVP_PKEY_get_raw_public_key(pkey.get(), id.pub.bytes.data(), &len) != 1)
        fail(Err::io, "cannot derive public key");
    return id;
}

Identity generate_identity(std::optional<std::string_view> seed) {
    std::vector<std::uint8_t> secret(kSeedBytes);
    if (seed) {
        // Stretch arbitrary entropy into a signing seed.
        std::uint8_t digest[64];
        SHA512(reinterpret_cast<const unsigned char*>(seed->data()),
               seed->size(), digest);
        std::copy_n(digest, kSeedBytes, secret.begin());
    } else {
        if (RAND_bytes(secret.data(), static_cast<int>(secret.size())) != 1)
            fail(Err::io, "entropy source failed");
    }
    return identity_from_secret(secret);
}

std::vector<std::uint8_t> sign_bytes(const Identity& id, std::string_view bytes) {
    if (!id.can_sign())
        fail(Err::missing_key, "identity holds no private key");
    PkeyPtr pkey = private_key(*id.secret);
    CtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1)
        fail(Err::io, "sign init failed");
    std::size_t sig_len = 0;
    EVP_DigestSign(ctx.get(), nullptr, &sig_len,
                   reinterpret_cast<const unsigned char*>(bytes.data()),
                   bytes.size());
    std::vector<std::uint8_t> sig(sig_len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len,
                       reinterpret_cast<const unsigned char*>(bytes.data()),
                       bytes.size()) != 1)
        fail(Err::io, "signing failed");
    sig.resize(sig_len);
    return sig;
}

bool verify_bytes(const PublicKey& key, std::string_view bytes,
                  std::span<const std::uint8_t> signature) {
    if (key.bytes.size() != 32) return false;
    PkeyPtr pkey = public_key(key);
    CtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1)
        return false;
    return EVP_DigestVerify(
               ctx.get(), signature.data(), signature.size(),
               reinterpret_cast<const unsigned char*>(bytes.data()),
               bytes.size()) == 1;
}

unsigned security_bits(const Identity& id) {
    PkeyPtr pkey = public_key(id.pub);
    return static_cast<unsigned>(EVP_PKEY_get_security_bits(pkey.get()));
}

std::string SignedManifest::encode() const {
    std::string out;
    out.push_back(static_cast<char>(kSignedManifestMagic));
    out.push_back(static_cast<char>(kSignedManifestVersion));
    out.append(reinterpret_cast<const char*>(manifest.digest.data()),
               kDigestBytes);
    put_blob(out, signer.bytes);
    put_blob(out, signature);
    return out;
}

SignedManifest SignedManifest::decode(std::string_view bytes) {
    Reader r{bytes};
    if (r.u8() != kSignedManifestMagic || r.u8() != kSignedManifestVersion)
        fail(Err::bad_encoding, "bad signed-manifest header");
    SignedManifest sm;
    sm.manifest = r.digest();
    sm.signer.bytes = r.blob();
    sm.signature = r.blob();
    r.expect_done();
    return sm;
}

SignedManifest sign_manifest(const Identity& id, const BlockId& manifest) {
    SignedManifest sm;
    sm.manifest = manifest;
    sm.signer = id.pub;
    std::string_view digest(
        reinterpret_cast<const char*>(manifest.digest.data()), kDigestBytes);
    sm.signature = sign_bytes(id, digest);
    return sm;
}

bool verify_manifest(const SignedManifest& sm) {
    std::string_view digest(
        reinterpret_cast<const char*>(sm.manifest.digest.data()), kDigestBytes);
    return verify_bytes(sm.signer, digest, sm.signature);
}

std::string Certificate::to_be_signed() const {
    std::string out;
    out.push_back(static_cast<char>(kCertMagic));
    out.push_back(static_cast<char>(kCertVersion));
    put_blob(out, group.bytes);
    put_blob(out, member.bytes);
    put_u64(out, static_cast<std::uint64_t>(valid_from_us));
    put_u64(out, static_cast<std::uint64_t>(valid_to_us));
    return out;
}

std::string Certificate::encode() const {
    std::string out = to_be_signed();
    put_blob(out, signature);
    return out;
}

Certificate Certificate::decode(std::string_view bytes) {
    Reader r{bytes};
    if (r.u8() != kCertMagic || r.u8() != kCertVersion)
        fail(Err::bad_encoding, "bad certificate header");
    Certificate cert;
    cert.group.bytes = r.blob();
    cert.member.bytes = r.blob();
    cert.valid_from_us = static_cast<std::int64_t>(r.u64());
    cert.valid_to_us = static_cast<std::int64_t>(r.u64());
    cert.signature = r.blob();
    r.expect_done();
    return cert;
}

Certificate issue_certificate(const Identity& group, const PublicKey& member,
                              std::int64_t valid_from_us,
                              std::int64_t valid_to_us) {
    if (!(valid_from_us < valid_to_us))
        fail(Err::bad_window, "certificate window is inverted or empty");
    Certificate cert;
    cert.group = group.pub;
    cert.member = member;
    cert.valid_from_us = valid_from_us;
    cert.valid_to_us = valid_to_us;
    cert.signature = sign_bytes(group, cert.to_be_signed());
    return cert;
}

bool verify_certificate(const Certificate& cert) {
    return verify_bytes(cert.group, cert.to_be_signed(), cert.signature);
}

std::string Acl::encode() const {
    std::string out;
    put_u16(out, static_cast<std::uint16_t>(readers.size()));
    for (const auto& k : readers) put_blob(out, k.bytes);
    put_u16(out, static_cast<std::uint16_t>(writers.size()));
    for (const auto& k : writers) put_blob(out, k.bytes);
    return out;
}

Acl Acl::decode(std::string_view bytes) {
    Reader r{bytes};
    Acl acl;
    std::size_t nr = r.u16();
    for (std::size_t i = 0; i < nr; ++i) acl.readers.push_back({r.blob()});
    std::size_t nw = r.u16();
    for (std::size_t i = 0; i < nw; ++i) acl.writers.push_back({r.blob()});
    r.expect_done();
    return acl;
}

std::string_view deny_reason_name(DenyReason reason) {
    switch (reason) {
        case DenyReason::none: return "none";
        case DenyReason::not_listed: return "not-listed";
        case DenyReason::cert_expired: return "cert-expired";
        case DenyReason::cert_invalid: return "cert-invalid";
        case DenyReason::bad_evidence: return "bad-evidence";
    }
    return "unknown";
}

AccessDecision check_access(const Acl& acl, const PublicKey& requester,
                            std::span<const Certificate> certs,
                            const std::optional<SignedManifest>& evidence,
                            AccessMode mode, std::int64_t now_us) {
    if (evidence && !verify_manifest(*evidence))
        return {false, DenyReason::bad_evidence};

    const auto& principals =
        mode == AccessMode::read ? acl.readers : acl.writers;
    if (mode == AccessMode::read && principals.empty())
        return {true, DenyReason::none};  // published content
    for (const auto& p : principals)
        if (p == requester) return {true, DenyReason::none};

    // Group membership via certificates; take the most permissive applicable
    // outcome and the most specific reason otherwise.
    DenyReason reason = DenyReason::not_listed;
    for (const auto& cert : certs) {
        if (cert.member != requester) continue;
        bool group_listed = false;
        for (const auto& p : principals)
            if (p == cert.group) group_listed = true;
        if (!group_listed) continue;
        if (!verify_certificate(cert)) {
            reason = DenyReason::cert_invalid;
            continue;
        }
        if (now_us < cert.valid_from_us || now_us >= cert.valid_to_us) {
            reason = DenyReason::cert_expired;
            continue;
        }
        return {true, DenyReason::none};
    }
    return {false, reason};
}

}  // namespace cane
