#include "cane/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <set>

namespace cane {

namespace {

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> comps;
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t slash = path.find('/', start);
        if (slash == std::string_view::npos) slash = path.size();
        if (slash > start) comps.emplace_back(path.substr(start, slash - start));
        start = slash + 1;
    }
    return comps;
}

Manifest load_manifest(BlockStore& store, const BlockId& id) {
    return Manifest::decode(store.get_block(id));
}

BlockId store_manifest(BlockStore& store, const Manifest& m) {
    return store.put_block(m.encode(), BlockClass::manifest);
}

std::optional<VersionStamp> last_stamp(BlockStore& store, const Manifest& m) {
    if (!m.history) return std::nullopt;
    Manifest hist = load_manifest(store, *m.history);
    std::optional<VersionStamp> last;
    for (const auto& e : hist.entries) {
        VersionStamp s = VersionStamp::parse(e.name);
        if (!last || *last < s) last = s;
    }
    return last;
}

// New manifest id for a directory after a mutation: prev points at the
// pre-mutation hash and the history directory gains (stamp -> prev). A
// directory created by this very write counts too; its pre-state is the
// empty manifest.
BlockId finalize_mutation(BlockStore& store, Manifest m,
                          const std::optional<BlockId>& old_id,
                          VersionStamp stamp) {
    BlockId pre = old_id ? *old_id : store_manifest(store, Manifest{});
    Manifest hist;
    if (m.history) hist = load_manifest(store, *m.history);
    hist.upsert({stamp.str(), EntryKind::dir, pre, "", BlockId{}});
    m.history = store_manifest(store, hist);
    m.prev = pre;
    return store_manifest(store, m);
}

void check_stamp(BlockStore& store, const Manifest& m, VersionStamp stamp) {
    auto last = last_stamp(store, m);
    if (last && !(*last < stamp))
        fail(Err::bad_stamp, "stamp does not exceed last stamp " + last->str());
}

ManifestEntry make_leaf_entry(BlockStore& store, const std::string& name,
                              std::string_view bytes, const WriteOptions& opts,
                              const ManifestEntry* existing) {
    ManifestEntry e;
    e.name = name;
    if (existing) {
        if (existing->kind == EntryKind::dir)
            fail(Err::wrong_type, "cannot overwrite directory: " + name);
        e.acl = existing->acl;
    }
    bool receptor =
        opts.receptor || (existing && existing->kind == EntryKind::receptor);
    if (!receptor && bytes.size() <= opts.lwf_threshold) {
        e.kind = EntryKind::lwf;
        e.inline_bytes = std::string(bytes);
    } else {
        ChunkList cl;
        cl.total_bytes = bytes.size();
        cl.chunks = store.chunk_and_store(bytes);
        e.kind = receptor ? EntryKind::receptor : EntryKind::file;
        e.target = store.put_block(cl.encode(), BlockClass::manifest);
    }
    return e;
}

struct MountLeaf {
    BlockId dir_manifest;
};

BlockId write_into(BlockStore& store, std::optional<BlockId> dir_id,
                   const std::vector<std::string>& comps, std::size_t i,
                   std::string_view bytes, VersionStamp stamp,
                   const WriteOptions& opts,
                   const std::optional<MountLeaf>& mount = std::nullopt) {
    Manifest m;
    if (dir_id) m = load_manifest(store, *dir_id);
    check_stamp(store, m, stamp);
    const std::string& name = comps[i];
    const ManifestEntry* existing = m.find(name);
    if (i + 1 == comps.size()) {
        if (mount) {
            if (existing && existing->kind != EntryKind::dir)
                fail(Err::wrong_type, "cannot mount over a file: " + name);
            m.upsert({name, EntryKind::dir, mount->dir_manifest, "",
                      existing ? existing->acl : BlockId{}});
        } else {
            m.upsert(make_leaf_entry(store, name, bytes, opts, existing));
        }
    } else {
        std::optional<BlockId> child_id;
        BlockId child_acl{};
        if (existing) {
            if (existing->kind != EntryKind::dir)
                fail(Err::wrong_type, "path traverses a non-directory: " + name);
            child_id = existing->target;
            child_acl = existing->acl;
        }
        BlockId new_child =
            write_into(store, child_id, comps, i + 1, bytes, stamp, opts, mount);
        m.upsert({name, EntryKind::dir, new_child, "", child_acl});
    }
    return finalize_mutation(store, std::move(m), dir_id, stamp);
}

std::string read_chunked(BlockStore& store, const BlockId& target) {
    ChunkList cl = ChunkList::decode(store.get_block(target));
    std::string out;
    out.reserve(cl.total_bytes);
    for (const auto& id : cl.chunks) out += store.get_block(id);
    if (out.size() != cl.total_bytes)
        fail(Err::corruption, "chunk list length mismatch");
    return out;
}

}  // namespace

std::string VersionStamp::str() const {
    std::time_t secs = utc_micros / 1000000;
    long micros = static_cast<long>(utc_micros % 1000000);
    if (micros < 0) {
        micros += 1000000;
        secs -= 1;
    }
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06ldZ.%u",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec, micros, seq);
    return buf;
}

VersionStamp VersionStamp::parse(std::string_view text) {
    std::tm tm{};
    long micros = 0;
    unsigned seq = 0;
    std::string s(text);
    int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d.%06ldZ.%u", &tm.tm_year,
                        &tm.tm_mon, &tm.tm_mday, &tm.tm_hour, &tm.tm_min,
                        &tm.tm_sec, &micros, &seq);
    if (n != 8) fail(Err::bad_stamp, "unparseable stamp: " + s);
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    std::time_t secs = timegm(&tm);
    VersionStamp v;
    v.utc_micros = static_cast<std::int64_t>(secs) * 1000000 + micros;
    v.seq = seq;
    return v;
}

TreeHandle create_root(BlockStore& store) {
    return {store_manifest(store, Manifest{})};
}

TreeHandle write_file(BlockStore& store, TreeHandle tree, std::string_view path,
                      std::string_view bytes, VersionStamp stamp,
                      const WriteOptions& opts) {
    auto comps = split_path(path);
    if (comps.empty()) fail(Err::bad_name, "empty path");
    for (const auto& c : comps)
        if (!is_legal_entry_name(c))
            fail(Err::bad_name, "illegal path component: " + c);
    return {write_into(store, tree.root, comps, 0, bytes, stamp, opts)};
}

TreeHandle mount_subtree(BlockStore& store, TreeHandle tree,
                         std::string_view path, const BlockId& dir_manifest,
                         VersionStamp stamp) {
    auto comps = split_path(path);
    for (const auto& c : comps)
        if (!is_legal_entry_name(c))
            fail(Err::bad_name, "illegal path component: " + c);
    Manifest mounted = Manifest::decode(store.get_block(dir_manifest));
    if (comps.empty()) {
        // Mounting at the root replaces its listing while extending the
        // prev/history linkage of the root itself.
        Manifest cur = load_manifest(store, tree.root);
        check_stamp(store, cur, stamp);
        Manifest next;
        next.entries = std::move(mounted.entries);
        next.history = cur.history;
        return {finalize_mutation(store, std::move(next), tree.root, stamp)};
    }
    return {write_into(store, tree.root, comps, 0, "", stamp, {},
                       MountLeaf{dir_manifest})};
}

ResolvedNode resolve_node(BlockStore& store, TreeHandle tree,
                          std::string_view path) {
    auto comps = split_path(path);
    BlockId cur = tree.root;
    std::vector<BlockId> parents;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string& c = comps[i];
        if (c == ".") {
            Manifest m = load_manifest(store, cur);
            if (!m.prev)
                fail(Err::no_history, "no previous version at this point");
            parents.push_back(cur);
            cur = *m.prev;
        } else if (c == "...") {
            Manifest m = load_manifest(store, cur);
            parents.push_back(cur);
            cur = m.history ? *m.history : store_manifest(store, Manifest{});
        } else if (c == "..") {
            if (parents.empty())
                fail(Err::not_found, "no parent above the root");
            cur = parents.back();
            parents.pop_back();
        } else {
            Manifest m = load_manifest(store, cur);
            const ManifestEntry* e = m.find(c);
            if (!e) fail(Err::not_found, "no such entry: " + c);
            if (e->kind == EntryKind::dir) {
                parents.push_back(cur);
                cur = e->target;
            } else {
                if (i + 1 != comps.size())
                    fail(Err::wrong_type, "path traverses a non-directory: " + c);
                return {false, cur, *e};
            }
        }
    }
    return {true, cur, {}};
}

BlockId resolve(BlockStore& store, TreeHandle tree, std::string_view path) {
    ResolvedNode node = resolve_node(store, tree, path);
    if (node.is_dir) return node.manifest_id;
    if (node.entry.kind == EntryKind::lwf)
        fail(Err::wrong_type, "light-weight file has no block of its own");
    return node.entry.target;
}

std::string read_file(BlockStore& store, TreeHandle tree,
                      std::string_view path) {
    ResolvedNode node = resolve_node(store, tree, path);
    if (node.is_dir) fail(Err::wrong_type, "path names a directory");
    if (node.entry.kind == EntryKind::lwf) return node.entry.inline_bytes;
    return read_chunked(store, node.entry.target);
}

std::vector<ManifestEntry> list_dir(BlockStore& store, TreeHandle tree,
                                    std::string_view path) {
    ResolvedNode node = resolve_node(store, tree, path);
    if (!node.is_dir) fail(Err::wrong_type, "path names a file");
    return load_manifest(store, node.manifest_id).entries;
}

std::vector<std::pair<VersionStamp, BlockId>> history(BlockStore& store,
                                                      TreeHandle tree,
                                                      std::string_view path) {
    ResolvedNode node = resolve_node(store, tree, path);
    if (!node.is_dir) fail(Err::wrong_type, "history applies to directories");
    Manifest m = load_manifest(store, node.manifest_id);
    std::vector<std::pair<VersionStamp, BlockId>> out;
    if (m.history) {
        Manifest hist = load_manifest(store, *m.history);
        for (const auto& e : hist.entries)
            out.emplace_back(VersionStamp::parse(e.name), e.target);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

namespace {

BlockId revert_into(BlockStore& store, const BlockId& dir_id,
                    const std::vector<std::string>& comps, std::size_t i,
                    VersionStamp target, VersionStamp new_stamp) {
    Manifest m = load_manifest(store, dir_id);
    check_stamp(store, m, new_stamp);
    if (i == comps.size()) {
        // Take the historical entry list; linkage still extends forward.
        std::optional<BlockId> historical;
        if (m.history) {
            Manifest hist = load_manifest(store, *m.history);
            if (const ManifestEntry* e = hist.find(target.str()))
                historical = e->target;
        }
        if (!historical)
            fail(Err::not_found, "no such stamp in history: " + target.str());
        Manifest restored = load_manifest(store, *historical);
        Manifest next;
        next.entries = std::move(restored.entries);
        next.history = m.history;
        return finalize_mutation(store, std::move(next), dir_id, new_stamp);
    }
    const ManifestEntry* e = m.find(comps[i]);
    if (!e || e->kind != EntryKind::dir)
        fail(Err::not_found, "no such directory: " + comps[i]);
    BlockId child_acl = e->acl;
    BlockId new_child =
        revert_into(store, e->target, comps, i + 1, target, new_stamp);
    m.upsert({comps[i], EntryKind::dir, new_child, "", child_acl});
    return finalize_mutation(store, std::move(m), dir_id, new_stamp);
}

}  // namespace

TreeHandle revert(BlockStore& store, TreeHandle tree, std::string_view path,
                  VersionStamp stamp, VersionStamp new_stamp) {
    auto comps = split_path(path);
    for (const auto& c : comps)
        if (!is_legal_entry_name(c))
            fail(Err::bad_name, "revert takes a plain directory path");
    return {revert_into(store, tree.root, comps, 0, stamp, new_stamp)};
}

ForkReport detect_forks(BlockStore& store, TreeHandle a, TreeHandle b) {
    auto chain = [&](const BlockId& head) {
        std::vector<BlockId> out;
        BlockId cur = head;
        while (true) {
            out.push_back(cur);
            Manifest m;
            try {
                m = load_manifest(store, cur);
            } catch (const CaneError& e) {
                if (e.kind() == Err::not_found)
                    fail(Err::corruption,
                         "prev-chain references a missing block: " + cur.hex());
                throw;
            }
            if (!m.prev) break;
            cur = *m.prev;
        }
        return out;
    };
    std::vector<BlockId> chain_a = chain(a.root);
    std::set<BlockId> seen(chain_a.begin(), chain_a.end());
    ForkReport report;
    BlockId cur = b.root;
    while (true) {
        if (seen.count(cur)) {
            report.ancestor = cur;
            break;
        }
        Manifest m;
        try {
            m = load_manifest(store, cur);
        } catch (const CaneError& e) {
            if (e.kind() == Err::not_found)
                fail(Err::corruption,
                     "prev-chain references a missing block: " + cur.hex());
            throw;
        }
        if (!m.prev) break;
        cur = *m.prev;
    }
    report.linear =
        report.ancestor && (*report.ancestor == a.root || *report.ancestor == b.root);
    if (!report.linear) report.heads = {a.root, b.root};
    return report;
}

}  // namespace cane
