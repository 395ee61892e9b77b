#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cane/store.hpp"
#include "cane/tree.hpp"
#include "cane/types.hpp"

namespace cane {

// An application as a content-addressed tree carrying its entire dependency
// closure by hash, with one directory tree per platform.
struct AppDirManifest {
    std::string name;
    std::vector<std::pair<std::string, BlockId>> platforms;  // sorted by tag
    std::vector<BlockId> deps;  // sorted, deduplicated appdir ids

    std::string encode() const;
    static AppDirManifest decode(std::string_view bytes);
};

// Canonical: identical inputs yield identical BlockId.
BlockId build_appdir(BlockStore& store, std::string_view name,
                     const std::map<std::string, TreeHandle>& platform_trees,
                     const std::vector<BlockId>& deps);

// Exact set of blocks needed to run on one platform: the platform's tree
// blocks plus, recursively, each dependency's blocks for that platform.
// Other platforms' trees are excluded.
std::set<BlockId> closure(BlockStore& store, const BlockId& app,
                          std::string_view platform);

struct FetchLog {
    std::vector<BlockId> requested;    // fetch-once: no id appears twice
    std::uint64_t bytes_fetched = 0;   // content bytes (trees and data)
};

// Demand-driven install: walks the closure, copying only blocks absent from
// the local store. Every fetched block is digest-verified before storage.
FetchLog materialize(BlockStore& local, const BlockId& app,
                     std::string_view platform, BlockStore& source);

}  // namespace cane
