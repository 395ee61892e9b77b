#include "cane/appdir.hpp"

#include <algorithm>
#include <functional>

#include "cane/manifest.hpp"

namespace cane {

namespace {

constexpr std::uint8_t kMagic = 0xAD;
constexpr std::uint8_t kVersion = 0x01;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_digest(std::string& out, const BlockId& id) {
    out.append(reinterpret_cast<const char*>(id.digest.data()), kDigestBytes);
}

struct Reader {
    std::string_view bytes;
    std::size_t pos = 0;

    void need(std::size_t n) {
        if (bytes.size() - pos < n) fail(Err::bad_encoding, "truncated appdir");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16() {
        std::uint16_t hi = u8();
        return static_cast<std::uint16_t>((hi << 8) | u8());
    }
    std::string str() {
        std::size_t n = u16();
        need(n);
        std::string out(bytes.substr(pos, n));
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
};

// Kinds a walk can encounter; appdir manifests are install metadata, the
// rest is installed content.
enum class WalkKind { appdir_meta, tree_manifest, chunk_list, data, acl };

// Shared traversal for closure and materialize. get() supplies bytes for an
// id and reports whether the visit should recurse (first sighting).
void walk_app(const BlockId& app, std::string_view platform,
              const std::function<std::string(const BlockId&, WalkKind)>& get,
              std::set<BlockId>& visited) {
    std::function<void(const BlockId&)> walk_tree = [&](const BlockId& dir) {
        if (!visited.insert(dir).second) return;
        Manifest m = Manifest::decode(get(dir, WalkKind::tree_manifest));
        for (const auto& e : m.entries) {
            if (!e.acl.is_zero() && visited.insert(e.acl).second)
                get(e.acl, WalkKind::acl);
            switch (e.kind) {
                case EntryKind::dir:
                    walk_tree(e.target);
                    break;
                case EntryKind::file:
                case EntryKind::receptor: {
                    if (!visited.insert(e.target).second) break;
                    ChunkList cl =
                        ChunkList::decode(get(e.target, WalkKind::chunk_list));
                    for (const auto& c : cl.chunks)
                        if (visited.insert(c).second) get(c, WalkKind::data);
                    break;
                }
                case EntryKind::lwf:
                    break;  // inlined, no block
            }
        }
    };

    std::function<void(const BlockId&)> walk = [&](const BlockId& id) {
        if (!visited.insert(id).second) return;
        AppDirManifest adm =
            AppDirManifest::decode(get(id, WalkKind::appdir_meta));
        auto it = std::find_if(adm.platforms.begin(), adm.platforms.end(),
                               [&](const auto& p) { return p.first == platform; });
        if (it == adm.platforms.end())
            fail(Err::missing_platform,
                 "appdir '" + adm.name + "' has no platform '" +
                     std::string(platform) + "'");
        walk_tree(it->second);
        for (const auto& dep : adm.deps) walk(dep);
    };
    walk(app);
}

}  // namespace

std::string AppDirManifest::encode() const {
    std::string out;
    out.push_back(static_cast<char>(kMagic));
    out.push_back(static_cast<char>(kVersion));
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put_u16(out, static_cast<std::uint16_t>(platforms.size()));
    for (const auto& [tag, id] : platforms) {
        put_u16(out, static_cast<std::uint16_t>(tag.size()));
        out += tag;
        put_digest(out, id);
    }
    put_u16(out, static_cast<std::uint16_t>(deps.size()));
    for (const auto& id : deps) put_digest(out, id);
    return out;
}

AppDirManifest AppDirManifest::decode(std::string_view bytes) {
    Reader r{bytes};
    if (r.u8() != kMagic || r.u8() != kVersion)
        fail(Err::bad_encoding, "bad appdir header");
    AppDirManifest adm;
    adm.name = r.str();
    std::size_t np = r.u16();
    for (std::size_t i = 0; i < np; ++i) {
        std::string tag = r.str();
        BlockId id = r.digest();
        if (i > 0 && !(adm.platforms.back().first < tag))
            fail(Err::bad_encoding, "appdir platforms not sorted");
        adm.platforms.emplace_back(std::move(tag), id);
    }
    std::size_t nd = r.u16();
    for (std::size_t i = 0; i < nd; ++i) adm.deps.push_back(r.digest());
    if (r.pos != bytes.size())
        fail(Err::bad_encoding, "trailing bytes after appdir");
    return adm;
}

BlockId build_appdir(BlockStore& store, std::string_view name,
                     const std::map<std::string, TreeHandle>& platform_trees,
                     const std::vector<BlockId>& deps) {
    AppDirManifest adm;
    adm.name = std::string(name);
    for (const auto& [tag, tree] : platform_trees)
        adm.platforms.emplace_back(tag, tree.root);
    adm.deps = deps;
    std::sort(adm.deps.begin(), adm.deps.end());
    adm.deps.erase(std::unique(adm.deps.begin(), adm.deps.end()),
                   adm.deps.end());

    // Content addressing makes true cycles unconstructible, but a malformed
    // store could still loop; verify deps exist and the graph terminates.
    std::set<BlockId> done;
    std::set<BlockId> in_progress;
    std::function<void(const BlockId&)> verify = [&](const BlockId& id) {
        if (done.count(id)) return;
        if (!in_progress.insert(id).second)
            fail(Err::dep_cycle, "dependency cycle through " + id.hex());
        if (!store.contains(id))
            fail(Err::not_found, "dependency not in store: " + id.hex());
        AppDirManifest dep = AppDirManifest::decode(store.get_block(id));
        for (const auto& d : dep.deps) verify(d);
        in_progress.erase(id);
        done.insert(id);
    };
    for (const auto& d : adm.deps) verify(d);

    return store.put_block(adm.encode(), BlockClass::manifest);
}

std::set<BlockId> closure(BlockStore& store, const BlockId& app,
                          std::string_view platform) {
    std::set<BlockId> visited;
    walk_app(app, platform,
             [&](const BlockId& id, WalkKind) { return store.get_block(id); },
             visited);
    return visited;
}

FetchLog materialize(BlockStore& local, const BlockId& app,
                     std::string_view platform, BlockStore& source) {
    FetchLog log;
    std::set<BlockId> visited;
    auto get = [&](const BlockId& id, WalkKind kind) -> std::string {
        if (local.contains(id)) return local.get_block(id);
        std::string bytes;
        try {
            bytes = source.get_block(id);
        } catch (const CaneError&) {
            fail(Err::fetch_failed, "cannot fetch block " + id.hex());
        }
        if (hash_bytes(bytes) != id)
            fail(Err::corruption, "fetched block fails digest check: " + id.hex());
        local.put_block(bytes, kind == WalkKind::data ? BlockClass::data
                                                      : BlockClass::manifest);
        log.requested.push_back(id);
        if (kind != WalkKind::appdir_meta) log.bytes_fetched += bytes.size();
        return bytes;
    };
    walk_app(app, platform, get, visited);
    return log;
}

}  // namespace cane
