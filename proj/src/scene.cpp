#include "cane/scene.hpp"

#include <algorithm>

#include "cane/manifest.hpp"

namespace cane {
namespace scene {

namespace {

enum class ElemKind { window, text, button, image, pane };

struct Attrs {
    ElemKind kind = ElemKind::pane;
    int x = 0, y = 0, w = 0, h = 0;
    std::string label;
};

std::string read_leaf(BlockStore& store, const ManifestEntry& e) {
    if (e.kind == EntryKind::lwf) return e.inline_bytes;
    ChunkList cl = ChunkList::decode(store.get_block(e.target));
    std::string out;
    for (const auto& c : cl.chunks) out += store.get_block(c);
    return out;
}

int parse_geometry(const std::string& text, const std::string& path,
                   const std::string& attr) {
    if (text.empty() || text.size() > 9 ||
        !std::all_of(text.begin(), text.end(),
                     [](char c) { return c >= '0' && c <= '9'; }))
        fail(Err::bad_scene,
             "malformed attribute '" + attr + "' at " + path + ": '" + text + "'");
    return std::stoi(text);
}

Attrs read_attrs(BlockStore& store, const Manifest& m, const std::string& path) {
    Attrs a;
    const ManifestEntry* kind = m.find("kind");
    if (!kind || kind->kind == EntryKind::dir)
        fail(Err::bad_scene, "element has no kind attribute at " + path);
    std::string k = read_leaf(store, *kind);
    if (k == "window") a.kind = ElemKind::window;
    else if (k == "text") a.kind = ElemKind::text;
    else if (k == "button") a.kind = ElemKind::button;
    else if (k == "image") a.kind = ElemKind::image;
    else if (k == "pane") a.kind = ElemKind::pane;
    else fail(Err::bad_scene, "unknown element kind at " + path + ": " + k);

    // Attributes are leaf entries; a child directory that happens to share an
    // attribute name is just a child.
    const ManifestEntry* label = m.find("label");
    if (label && label->kind != EntryKind::dir) a.label = read_leaf(store, *label);

    auto geom = [&](const char* name, int fallback) {
        const ManifestEntry* e = m.find(name);
        if (!e || e->kind == EntryKind::dir) return fallback;
        return parse_geometry(read_leaf(store, *e), path, name);
    };
    int label_len = static_cast<int>(a.label.size());
    int def_w = 8, def_h = 4;
    if (a.kind == ElemKind::text) { def_w = label_len; def_h = 1; }
    if (a.kind == ElemKind::button) { def_w = label_len + 2; def_h = 1; }
    a.x = geom("x", 0);
    a.y = geom("y", 0);
    a.w = geom("w", def_w);
    a.h = geom("h", def_h);
    return a;
}

void put_text(Fragment& f, int x, int y, std::string_view text) {
    if (y < 0 || y >= f.h) return;
    for (std::size_t i = 0; i < text.size(); ++i) {
        int cx = x + static_cast<int>(i);
        if (cx >= 0 && cx < f.w) f.rows[y][cx] = text[i];
    }
}

void draw_element(Fragment& f, const Attrs& a) {
    switch (a.kind) {
        case ElemKind::window:
            for (int cx = 0; cx < f.w; ++cx) {
                f.rows[0][cx] = '-';
                f.rows[f.h - 1][cx] = '-';
            }
            for (int cy = 0; cy < f.h; ++cy) {
                f.rows[cy][0] = '|';
                f.rows[cy][f.w - 1] = '|';
            }
            f.rows[0][0] = '+';
            f.rows[0][f.w - 1] = '+';
            f.rows[f.h - 1][0] = '+';
            f.rows[f.h - 1][f.w - 1] = '+';
            put_text(f, 1, 0, a.label.substr(0, std::max(f.w - 2, 0)));
            break;
        case ElemKind::button:
            put_text(f, 0, 0, "[" + a.label + "]");
            break;
        case ElemKind::text:
            put_text(f, 0, 0, a.label);
            break;
        case ElemKind::image:
            for (auto& row : f.rows) std::fill(row.begin(), row.end(), '*');
            break;
        case ElemKind::pane:
            break;
    }
}

// Copy src into dst at (x, y), clipped to dst bounds.
void blit(Fragment& dst, const Fragment& src, int x, int y) {
    for (int sy = 0; sy < src.h; ++sy) {
        int dy = y + sy;
        if (dy < 0 || dy >= dst.h) continue;
        for (int sx = 0; sx < src.w; ++sx) {
            int dx = x + sx;
            if (dx >= 0 && dx < dst.w) dst.rows[dy][dx] = src.rows[sy][sx];
        }
    }
}

class Renderer {
public:
    Renderer(BlockStore& store, RenderCache& cache)
        : store_(store), cache_(cache) {}

    const Fragment& fragment(const BlockId& id, const std::string& path) {
        auto it = cache_.fragments.find(id);
        if (it != cache_.fragments.end()) {
            cache_.hits++;
            return it->second;
        }
        cache_.misses++;
        Manifest m = Manifest::decode(store_.get_block(id));
        Attrs a = read_attrs(store_, m, path.empty() ? "/" : path);
        Fragment f;
        f.w = a.w;
        f.h = a.h;
        f.rows.assign(static_cast<std::size_t>(std::max(f.h, 0)),
                      std::string(static_cast<std::size_t>(std::max(f.w, 0)), ' '));
        if (f.w > 0 && f.h > 0) {
            draw_element(f, a);
            for (const auto& e : m.entries) {
                if (e.kind != EntryKind::dir) continue;
                std::string child_path = path + "/" + e.name;
                Attrs ca = peek_position(e.target, child_path);
                const Fragment& cf = fragment(e.target, child_path);
                blit(f, cf, ca.x, ca.y);
            }
        }
        return cache_.fragments.emplace(id, std::move(f)).first->second;
    }

    const EventMap& regions(const BlockId& id, const std::string& path) {
        auto it = cache_.regions.find(id);
        if (it != cache_.regions.end()) {
            cache_.hits++;
            return it->second;
        }
        cache_.misses++;
        Manifest m = Manifest::decode(store_.get_block(id));
        Attrs a = read_attrs(store_, m, path.empty() ? "/" : path);
        EventMap out;
        for (const auto& e : m.entries)
            if (e.kind == EntryKind::receptor)
                out.push_back({0, 0, a.w, a.h, e.name});
        for (const auto& e : m.entries) {
            if (e.kind != EntryKind::dir) continue;
            std::string child_path = path + "/" + e.name;
            Attrs ca = peek_position(e.target, child_path);
            for (EventRegion r : regions(e.target, child_path)) {
                r.x += ca.x;
                r.y += ca.y;
                r.receptor_path = e.name + "/" + r.receptor_path;
                out.push_back(std::move(r));
            }
        }
        return cache_.regions.emplace(id, std::move(out)).first->second;
    }

private:
    // Placement needs only the child's coordinates, not a render.
    Attrs peek_position(const BlockId& id, const std::string& path) {
        Manifest m = Manifest::decode(store_.get_block(id));
        return read_attrs(store_, m, path);
    }

    BlockStore& store_;
    RenderCache& cache_;
};

}  // namespace

BlockId build_element(BlockStore& store, const ElementSpec& spec) {
    Manifest m;
    ManifestEntry kind;
    kind.name = "kind";
    kind.kind = EntryKind::lwf;
    kind.inline_bytes = spec.kind;
    m.upsert(std::move(kind));
    for (const auto& [name, value] : spec.attrs) {
        ManifestEntry e;
        e.name = name;
        if (value.size() <= 64) {
            e.kind = EntryKind::lwf;
            e.inline_bytes = value;
        } else {
            ChunkList cl;
            cl.total_bytes = value.size();
            cl.chunks = store.chunk_and_store(value);
            e.kind = EntryKind::file;
            e.target = store.put_block(cl.encode(), BlockClass::manifest);
        }
        m.upsert(std::move(e));
    }
    for (const auto& name : spec.receptors) {
        ManifestEntry e;
        e.name = name;
        e.kind = EntryKind::receptor;
        e.target = store.put_block(ChunkList{}.encode(), BlockClass::manifest);
        m.upsert(std::move(e));
    }
    for (const auto& [name, child] : spec.children)
        m.upsert({name, EntryKind::dir, build_element(store, child), "", {}});
    return store.put_block(m.encode(), BlockClass::manifest);
}

TreeHandle mount_element(BlockStore& store, TreeHandle tree,
                         std::string_view path, const ElementSpec& spec,
                         VersionStamp stamp) {
    return mount_subtree(store, tree, path, build_element(store, spec), stamp);
}

RenderResult render(BlockStore& store, TreeHandle scene, RenderCache& cache) {
    Renderer r(store, cache);
    std::uint64_t before = cache.misses;
    RenderResult result;
    result.grid = r.fragment(scene.root, "");
    result.render_calls = cache.misses - before;
    return result;
}

EventMap event_map(BlockStore& store, TreeHandle scene, RenderCache& cache) {
    Renderer r(store, cache);
    return r.regions(scene.root, "");
}

TreeHandle deliver_event(BlockStore& store, TreeHandle scene, int px, int py,
                         std::string_view payload, VersionStamp stamp) {
    RenderCache cache;
    EventMap map = event_map(store, scene, cache);
    for (auto it = map.rbegin(); it != map.rend(); ++it) {
        if (it->contains(px, py)) {
            WriteOptions opts;
            opts.receptor = true;
            return write_file(store, scene, it->receptor_path, payload, stamp,
                              opts);
        }
    }
    fail(Err::no_target, "no receptor at (" + std::to_string(px) + "," +
                             std::to_string(py) + ")");
}

std::string to_text(const Fragment& grid) {
    std::string out;
    for (const auto& row : grid.rows) {
        out += row;
        out += '\n';
    }
    return out;
}

}  // namespace scene
}  // namespace cane
