#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cane/types.hpp"

namespace cane {

enum class EntryKind : std::uint8_t { file = 0, dir = 1, lwf = 2, receptor = 3 };

// Reserved path atoms: "." is the previous version, "..." the history
// directory, ".." the lexical parent. None may appear as a stored name.
bool is_legal_entry_name(std::string_view name);

struct ManifestEntry {
    std::string name;
    EntryKind kind = EntryKind::file;
    BlockId target;           // chunk-list for file/receptor, manifest for dir
    std::string inline_bytes; // lwf only
    BlockId acl;              // zero digest = no ACL (world-readable)

    bool operator==(const ManifestEntry&) const = default;
};

// Canonical directory listing. Encoding is bit-exact and unique:
// encode(decode(x)) == x for every valid encoding.
struct Manifest {
    std::vector<ManifestEntry> entries;  // sorted bytewise by name
    std::optional<BlockId> prev;         // the "." linkage
    std::optional<BlockId> history;      // the "..." directory manifest

    std::string encode() const;
    static Manifest decode(std::string_view bytes);

    const ManifestEntry* find(std::string_view name) const;
    // Insert or replace, keeping the sort order.
    void upsert(ManifestEntry entry);
};

// Ordered list of chunk ids plus the total byte length; stored as a block so
// a file of any size has a single target hash.
struct ChunkList {
    std::uint64_t total_bytes = 0;
    std::vector<BlockId> chunks;

    std::string encode() const;
    static ChunkList decode(std::string_view bytes);
};

}  // namespace cane
