#include "cane/manifest.hpp"

#include <algorithm>

namespace cane {

namespace {

constexpr std::uint8_t kMagic = 0xCA;
constexpr std::uint8_t kVersion = 0x01;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_digest(std::string& out, const BlockId& id) {
    out.append(reinterpret_cast<const char*>(id.digest.data()), kDigestBytes);
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>(
            (static_cast<std::uint8_t>(bytes_[pos_]) << 8) |
            static_cast<std::uint8_t>(bytes_[pos_ + 1]));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = u16();
        return (v << 16) | u16();
    }
    std::uint64_t u64() {
        std::uint64_t v = u32();
        return (v << 32) | u32();
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string out(bytes_.substr(pos_, n));
        pos_ += n;
        return out;
    }
    BlockId digest() {
        need(kDigestBytes);
        BlockId id;
        std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes_.data()) + pos_,
                    kDigestBytes, id.digest.begin());
        pos_ += kDigestBytes;
        return id;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n)
            fail(Err::bad_encoding, "truncated encoding");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

bool is_legal_entry_name(std::string_view name) {
    if (name.empty() || name == "." || name == ".." || name == "...") return false;
    return name.find('/') == std::string_view::npos;
}

const ManifestEntry* Manifest::find(std::string_view name) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), name,
                               [](const ManifestEntry& e, std::string_view n) {
                                   return e.name < n;
                               });
    if (it != entries.end() && it->name == name) return &*it;
    return nullptr;
}

void Manifest::upsert(ManifestEntry entry) {
    auto it = std::lower_bound(entries.begin(), entries.end(), entry.name,
                               [](const ManifestEntry& e, const std::string& n) {
                                   return e.name < n;
                               });
    if (it != entries.end() && it->name == entry.name)
        *it = std::move(entry);
    else
        entries.insert(it, std::move(entry));
}

std::string Manifest::encode() const {
    std::string out;
    out.push_back(static_cast<char>(kMagic));
    out.push_back(static_cast<char>(kVersion));
    out.push_back(prev ? 1 : 0);
    if (prev) put_digest(out, *prev);
    out.push_back(history ? 1 : 0);
    if (history) put_digest(out, *history);
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out += e.name;
        out.push_back(static_cast<char>(e.kind));
        put_digest(out, e.kind == EntryKind::lwf ? BlockId{} : e.target);
        if (e.kind == EntryKind::lwf) {
            put_u16(out, static_cast<std::uint16_t>(e.inline_bytes.size()));
            out += e.inline_bytes;
        }
        put_digest(out, e.acl);
    }
    return out;
}

Manifest Manifest::decode(std::string_view bytes) {
    Reader r(bytes);
    if (r.u8() != kMagic) fail(Err::bad_encoding, "bad manifest magic");
    if (r.u8() != kVersion) fail(Err::bad_encoding, "bad manifest version");
    Manifest m;
    std::uint8_t prev_flag = r.u8();
    if (prev_flag > 1) fail(Err::bad_encoding, "bad prev flag");
    if (prev_flag) m.prev = r.digest();
    std::uint8_t hist_flag = r.u8();
    if (hist_flag > 1) fail(Err::bad_encoding, "bad history flag");
    if (hist_flag) m.history = r.digest();
    std::uint32_t count = r.u32();
    m.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ManifestEntry e;
        e.name = r.bytes(r.u16());
        if (!is_legal_entry_name(e.name))
            fail(Err::bad_encoding, "illegal entry name in manifest");
        std::uint8_t kind = r.u8();
        if (kind > 3) fail(Err::bad_encoding, "bad entry kind");
        e.kind = static_cast<EntryKind>(kind);
        e.target = r.digest();
        if (e.kind == EntryKind::lwf) {
            if (!e.target.is_zero())
                fail(Err::bad_encoding, "lwf entry with nonzero target");
            e.inline_bytes = r.bytes(r.u16());
        }
        e.acl = r.digest();
        if (i > 0 && !(m.entries.back().name < e.name))
            fail(Err::bad_encoding, "manifest entries not strictly sorted");
        m.entries.push_back(std::move(e));
    }
    if (!r.done()) fail(Err::bad_encoding, "trailing bytes after manifest");
    return m;
}

std::string ChunkList::encode() const {
    std::string out;
    std::uint64_t v = total_bytes;
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<char>((v >> shift) & 0xff));
    for (const auto& id : chunks) put_digest(out, id);
    return out;
}

ChunkList ChunkList::decode(std::string_view bytes) {
    Reader r(bytes);
    ChunkList cl;
    cl.total_bytes = r.u64();
    while (!r.done()) cl.chunks.push_back(r.digest());
    return cl;
}

}  // namespace cane
