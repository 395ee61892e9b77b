#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cane/store.hpp"
#include "cane/tree.hpp"
#include "cane/types.hpp"

namespace cane {
namespace scene {

// A rendered subtree at its local origin; parents composite fragments at
// each child's (x, y).
struct Fragment {
    int w = 0;
    int h = 0;
    std::vector<std::string> rows;
};

struct EventRegion {
    int x = 0, y = 0, w = 0, h = 0;
    std::string receptor_path;

    bool contains(int px, int py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
};

// Later entries are higher in z-order; hit testing scans from the back.
using EventMap = std::vector<EventRegion>;

// Fragments and region lists keyed by manifest hash; a cached fragment
// always equals what a cold render of the same hash would produce.
struct RenderCache {
    std::unordered_map<BlockId, Fragment, BlockIdHash> fragments;
    std::unordered_map<BlockId, EventMap, BlockIdHash> regions;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
};

// Declarative element description; building it yields a canonical manifest,
// so byte-identical elements share one block and one cached fragment.
struct ElementSpec {
    std::string kind;                               // window/text/button/image/pane
    std::map<std::string, std::string> attrs;       // x,y,w,h,label
    std::vector<std::string> receptors;             // receptor entry names
    std::map<std::string, ElementSpec> children;
};

BlockId build_element(BlockStore& store, const ElementSpec& spec);

// Mounts the element at path ("" = scene root) with normal history semantics.
TreeHandle mount_element(BlockStore& store, TreeHandle tree,
                         std::string_view path, const ElementSpec& spec,
                         VersionStamp stamp);

struct RenderResult {
    Fragment grid;
    std::uint64_t render_calls = 0;  // cache misses only
};

// Recursive top-down render to a monospace character grid. Identical
// subtrees render once; everything else is copied from the cache.
RenderResult render(BlockStore& store, TreeHandle scene, RenderCache& cache);

EventMap event_map(BlockStore& store, TreeHandle scene, RenderCache& cache);

// Writes the payload into the receptor of the topmost region containing the
// point; the write creates history like any file write.
TreeHandle deliver_event(BlockStore& store, TreeHandle scene, int px, int py,
                         std::string_view payload, VersionStamp stamp);

std::string to_text(const Fragment& grid);  // LF-separated rows

}  // namespace scene
}  // namespace cane
