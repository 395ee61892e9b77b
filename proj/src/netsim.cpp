#include "cane/netsim.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

namespace cane {
namespace netsim {

namespace {

Role parse_role(const std::string& word) {
    if (word == "origin") return Role::origin;
    if (word == "router") return Role::router;
    if (word == "client") return Role::client;
    fail(Err::bad_spec, "unknown node role: " + word);
}

// Bounded LRU holding actual block bytes.
class Lru {
public:
    explicit Lru(std::size_t capacity) : capacity_(capacity) {}

    bool contains(const std::string& key) const { return map_.count(key) != 0; }

    const std::string& fetch(const std::string& key) {
        auto it = map_.find(key);
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    void insert(const std::string& key, const std::string& bytes) {
        if (capacity_ == 0) return;
        if (contains(key)) {
            fetch(key);
            return;
        }
        if (order_.size() >= capacity_) {
            map_.erase(order_.back().first);
            order_.pop_back();
        }
        order_.emplace_front(key, bytes);
        map_[key] = order_.begin();
    }

private:
    std::size_t capacity_;
    std::list<std::pair<std::string, std::string>> order_;
    std::unordered_map<std::string,
                       std::list<std::pair<std::string, std::string>>::iterator>
        map_;
};

std::string block_key(const std::string& file, int idx) {
    return file + "#" + std::to_string(idx);
}

// Synthetic block content; its digest is the block's address, so cache
// deliveries can be verified the same way real reads are.
std::string block_content(const std::string& file, int idx) {
    return "blockdata:" + block_key(file, idx);
}

}  // namespace

Scenario Scenario::parse(std::istream& in) {
    Scenario sc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream words(line);
        std::string verb;
        if (!(words >> verb)) continue;
        auto bad = [&](const std::string& why) {
            fail(Err::bad_spec,
                 "scenario line " + std::to_string(lineno) + ": " + why);
        };
        if (verb == "node") {
            NodeSpec n;
            std::string role;
            if (!(words >> n.id >> role)) bad("node needs <id> <role>");
            n.role = parse_role(role);
            std::string opt;
            while (words >> opt) {
                if (opt.rfind("cache=", 0) == 0)
                    n.cache_blocks = std::stoull(opt.substr(6));
                else
                    bad("unknown node option: " + opt);
            }
            sc.nodes.push_back(std::move(n));
        } else if (verb == "link") {
            LinkSpec l;
            if (!(words >> l.a >> l.b >> l.latency))
                bad("link needs <a> <b> <latency>");
            if (l.latency < 1) bad("latency must be positive");
            sc.links.push_back(std::move(l));
        } else if (verb == "content") {
            ContentSpec c;
            if (!(words >> c.origin >> c.file >> c.n_blocks))
                bad("content needs <origin> <file> <n-blocks>");
            if (c.n_blocks < 1) bad("content needs at least one block");
            sc.contents.push_back(std::move(c));
        } else if (verb == "request") {
            RequestSpec r;
            if (!(words >> r.client >> r.file >> r.tick))
                bad("request needs <client> <file> <tick>");
            sc.requests.push_back(std::move(r));
        } else if (verb == "kill") {
            KillSpec k;
            if (!(words >> k.node >> k.tick)) bad("kill needs <node> <tick>");
            sc.kills.push_back(std::move(k));
        } else {
            bad("unknown directive: " + verb);
        }
    }
    return sc;
}

Scenario Scenario::parse_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
}

std::uint64_t Metrics::origin_total() const {
    std::uint64_t total = 0;
    for (const auto& [_, v] : origin_transmissions) total += v;
    return total;
}

std::uint64_t Metrics::cache_hit_total() const {
    std::uint64_t total = 0;
    for (const auto& [_, v] : cache_hits) total += v;
    return total;
}

std::string Metrics::report() const {
    std::ostringstream out;
    out << "seed=" << seed << "\n"
        << "requests=" << requests.size() << "\n"
        << "completed=" << completed << "\n"
        << "failed=" << failed << "\n"
        << "total_hops=" << total_hops << "\n"
        << "origin_tx_total=" << origin_total() << "\n"
        << "cache_hits_total=" << cache_hit_total() << "\n";
    for (const auto& [id, v] : origin_transmissions)
        out << "origin_tx." << id << "=" << v << "\n";
    for (const auto& [id, v] : cache_hits)
        out << "cache_hits." << id << "=" << v << "\n";
    for (const auto& [link, v] : link_transmissions)
        out << "link_tx." << link.first << "-" << link.second << "=" << v << "\n";
    return out.str();
}

std::string Metrics::csv() const {
    std::ostringstream out;
    out << "request_id,issue,complete,hops,source\n";
    for (const auto& r : requests)
        out << r.id << "," << r.issue << "," << r.complete << "," << r.hops
            << "," << r.source << "\n";
    return out.str();
}

SimNetwork::SimNetwork(const Scenario& scenario) : scenario_(scenario) {
    std::set<std::string> names;
    for (const auto& n : scenario_.nodes)
        if (!names.insert(n.id).second)
            fail(Err::bad_spec, "duplicate node id: " + n.id);
    auto declared = [&](const std::string& id, const char* what) {
        if (!names.count(id))
            fail(Err::bad_spec, std::string(what) + " references undeclared node: " + id);
    };
    for (const auto& l : scenario_.links) {
        declared(l.a, "link");
        declared(l.b, "link");
    }
    for (const auto& c : scenario_.contents) declared(c.origin, "content");
    for (const auto& r : scenario_.requests) declared(r.client, "request");
    for (const auto& k : scenario_.kills) declared(k.node, "kill");
}

Metrics SimNetwork::run(std::uint64_t seed, bool caching) const {
    const auto& sc = scenario_;
    const std::size_t n = sc.nodes.size();
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < n; ++i) index[sc.nodes[i].id] = static_cast<int>(i);

    std::vector<std::vector<std::pair<int, std::int64_t>>> adj(n);
    for (const auto& l : sc.links) {
        int a = index.at(l.a), b = index.at(l.b);
        adj[a].emplace_back(b, l.latency);
        adj[b].emplace_back(a, l.latency);
    }

    std::map<std::string, int> file_origin;          // file -> origin index
    std::map<std::string, int> file_blocks;          // file -> block count
    std::map<int, std::set<std::string>> origin_has; // origin -> block keys
    for (const auto& c : sc.contents) {
        int o = index.at(c.origin);
        if (sc.nodes[o].role != Role::origin)
            fail(Err::bad_spec, "content host is not an origin: " + c.origin);
        file_origin[c.file] = o;
        file_blocks[c.file] = c.n_blocks;
        for (int i = 0; i < c.n_blocks; ++i)
            origin_has[o].insert(block_key(c.file, i));
    }

    // Next hop toward each origin along the shortest path, smallest node
    // index breaking ties for determinism.
    std::map<int, std::vector<int>> next_hop;  // origin -> per-node next node
    for (const auto& [_, o] : file_origin) {
        if (next_hop.count(o)) continue;
        std::vector<std::int64_t> dist(n, std::numeric_limits<std::int64_t>::max());
        std::vector<int> next(n, -1);
        using Item = std::tuple<std::int64_t, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[o] = 0;
        heap.emplace(0, o);
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (d != dist[u]) continue;
            for (auto [v, w] : adj[u]) {
                std::int64_t nd = d + w;
                if (nd < dist[v] || (nd == dist[v] && next[v] > u)) {
                    dist[v] = nd;
                    next[v] = u;
                    heap.emplace(nd, v);
                }
            }
        }
        next_hop[o] = std::move(next);
    }

    std::vector<bool> alive(n, true);
    std::vector<Lru> caches;
    caches.reserve(n);
    for (const auto& node : sc.nodes)
        caches.emplace_back(node.role == Role::router ? node.cache_blocks : 0);

    Metrics metrics;
    metrics.seed = seed;
    for (const auto& node : sc.nodes) {
        if (node.role == Role::origin) metrics.origin_transmissions[node.id] = 0;
        if (node.role == Role::router) metrics.cache_hits[node.id] = 0;
    }

    struct BlockRequest {
        std::int64_t tick;
        int client;
        std::uint64_t id;
        std::string key;
        std::string file;
        int block_idx;
    };
    std::vector<BlockRequest> reqs;
    std::uint64_t next_id = 0;
    for (const auto& r : sc.requests) {
        auto it = file_blocks.find(r.file);
        int blocks = it == file_blocks.end() ? 1 : it->second;
        for (int i = 0; i < blocks; ++i)
            reqs.push_back({r.tick, index.at(r.client), next_id++,
                            block_key(r.file, i), r.file, i});
    }
    // Interleaving order is (tick, node, request-id); the seed selects no
    // behavior today but is carried into the report for reproducibility.
    std::stable_sort(reqs.begin(), reqs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.tick, a.client, a.id) < std::tie(b.tick, b.client, b.id);
    });
    std::vector<KillSpec> kills = sc.kills;
    std::stable_sort(kills.begin(), kills.end(),
                     [](const auto& a, const auto& b) { return a.tick < b.tick; });

    auto record_link = [&](int a, int b) {
        auto key = std::minmax(sc.nodes[a].id, sc.nodes[b].id);
        metrics.link_transmissions[{key.first, key.second}]++;
    };

    std::size_t kill_pos = 0;
    for (const auto& req : reqs) {
        while (kill_pos < kills.size() && kills[kill_pos].tick <= req.tick)
            alive[index.at(kills[kill_pos++].node)] = false;

        RequestRecord rec;
        rec.id = req.id;
        rec.issue = req.tick;

        auto fo = file_origin.find(req.file);
        if (fo == file_origin.end()) {
            metrics.failed++;
            metrics.requests.push_back(std::move(rec));
            continue;
        }
        int origin = fo->second;
        const std::vector<int>& next = next_hop.at(origin);

        // Walk hop by hop toward the origin; first holder answers.
        std::vector<int> path{req.client};
        std::vector<std::int64_t> lat{0};
        int answer = -1;
        bool dead_path = false;
        int cur = req.client;
        while (true) {
            if (cur != req.client) {
                if (!alive[cur]) {
                    dead_path = true;
                    break;
                }
                bool has = false;
                if (caching && sc.nodes[cur].role == Role::router &&
                    caches[cur].contains(req.key)) {
                    has = true;
                } else if (cur == origin && origin_has[origin].count(req.key)) {
                    has = true;
                }
                if (has) {
                    answer = cur;
                    break;
                }
            }
            if (cur == origin) break;  // origin reached but cannot serve
            int hop = next[cur];
            if (hop < 0) break;  // partitioned
            std::int64_t w = 0;
            for (auto [v, lw] : adj[cur])
                if (v == hop) w = lw;
            path.push_back(hop);
            lat.push_back(w);
            cur = hop;
        }

        if (answer < 0 || dead_path) {
            metrics.failed++;
            rec.hops = static_cast<int>(path.size()) - 1;
            metrics.requests.push_back(std::move(rec));
            continue;
        }

        // Serve: the block's address is the digest of its content, and a
        // cache-delivered copy must hash to it.
        BlockId address = hash_bytes(block_content(req.file, req.block_idx));
        std::string bytes = answer == origin
                                ? block_content(req.file, req.block_idx)
                                : caches[answer].fetch(req.key);
        if (hash_bytes(bytes) != address)
            fail(Err::corruption, "cache served corrupt block " + req.key);

        int hops = 0;
        std::int64_t oneway = 0;
        for (std::size_t i = 1; i < path.size(); ++i) {
            oneway += lat[i];
            ++hops;
            if (path[i] == answer) break;
        }
        if (answer == origin)
            metrics.origin_transmissions[sc.nodes[origin].id]++;
        else
            metrics.cache_hits[sc.nodes[answer].id]++;

        // Response retraces the path; every router on the way back caches.
        for (int i = hops; i >= 1; --i) {
            record_link(path[i], path[i - 1]);
            int node = path[i - 1];
            if (caching && node != req.client && sc.nodes[node].role == Role::router)
                caches[node].insert(req.key, bytes);
        }

        rec.ok = true;
        rec.hops = hops;
        rec.complete = req.tick + 2 * oneway;
        rec.source = sc.nodes[answer].id;
        metrics.total_hops += static_cast<std::uint64_t>(hops);
        metrics.completed++;
        metrics.requests.push_back(std::move(rec));
    }

    return metrics;
}

}  // namespace netsim
}  // namespace cane
