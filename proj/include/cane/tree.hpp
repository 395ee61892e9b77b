#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cane/manifest.hpp"
#include "cane/store.hpp"
#include "cane/types.hpp"

namespace cane {

// Microsecond UTC timestamp plus a small disambiguator; rendered as
// "2005-07-14T14:23:17.000001Z.1". Strictly increasing along any single
// directory's history chain.
struct VersionStamp {
    std::int64_t utc_micros = 0;
    std::uint32_t seq = 0;

    auto operator<=>(const VersionStamp&) const = default;

    std::string str() const;
    static VersionStamp parse(std::string_view text);
};

struct TreeHandle {
    BlockId root;
    bool operator==(const TreeHandle&) const = default;
};

struct WriteOptions {
    std::size_t lwf_threshold = 64;
    bool receptor = false;  // force a receptor entry (never inlined)
};

struct ForkReport {
    bool linear = false;
    std::optional<BlockId> ancestor;
    std::vector<BlockId> heads;
};

// Result of resolving a path: either a directory manifest or a leaf entry.
struct ResolvedNode {
    bool is_dir = false;
    BlockId manifest_id;   // the directory itself, or the leaf's parent
    ManifestEntry entry;   // valid when !is_dir
};

TreeHandle create_root(BlockStore& store);

// Rewrites every manifest along the path, setting prev to the pre-write hash
// and extending the "..." history with (stamp -> prev). Old roots stay fully
// readable.
TreeHandle write_file(BlockStore& store, TreeHandle tree, std::string_view path,
                      std::string_view bytes, VersionStamp stamp,
                      const WriteOptions& opts = {});

std::string read_file(BlockStore& store, TreeHandle tree, std::string_view path);

// Links an already-stored directory manifest at path. The ancestors gain
// history like any mutation; the mounted subtree keeps its own identity, so
// content-identical subtrees share one manifest block.
TreeHandle mount_subtree(BlockStore& store, TreeHandle tree,
                         std::string_view path, const BlockId& dir_manifest,
                         VersionStamp stamp);

// Path atoms: ordinary names, "." (previous version), "..." (history
// directory), ".." (lexical parent). Returns the manifest id for directories
// and the target id for file/receptor entries.
BlockId resolve(BlockStore& store, TreeHandle tree, std::string_view path);

ResolvedNode resolve_node(BlockStore& store, TreeHandle tree,
                          std::string_view path);

std::vector<ManifestEntry> list_dir(BlockStore& store, TreeHandle tree,
                                    std::string_view path);

// One element per mutation that touched the directory, stamp-ascending.
std::vector<std::pair<VersionStamp, BlockId>> history(BlockStore& store,
                                                      TreeHandle tree,
                                                      std::string_view path);

// Restores the directory at path to its state just before the mutation with
// the given stamp. Only manifests are written; the revert itself appears in
// history under new_stamp.
TreeHandle revert(BlockStore& store, TreeHandle tree, std::string_view path,
                  VersionStamp stamp, VersionStamp new_stamp);

// Walks both prev-chains; reports the common ancestor and divergent heads,
// or linear when one root is an ancestor of the other.
ForkReport detect_forks(BlockStore& store, TreeHandle a, TreeHandle b);

}  // namespace cane
