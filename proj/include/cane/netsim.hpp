#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <list>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cane/types.hpp"

namespace cane {
namespace netsim {

enum class Role { origin, router, client };

struct NodeSpec {
    std::string id;
    Role role = Role::client;
    std::size_t cache_blocks = std::numeric_limits<std::size_t>::max();
};

struct LinkSpec {
    std::string a, b;
    std::int64_t latency = 1;
};

struct ContentSpec {
    std::string origin;
    std::string file;
    int n_blocks = 0;
};

struct RequestSpec {
    std::string client;
    std::string file;
    std::int64_t tick = 0;
};

struct KillSpec {
    std::string node;
    std::int64_t tick = 0;
};

// Line-oriented scenario text:
//   node <id> <origin|router|client> [cache=<blocks>]
//   link <a> <b> <latency>
//   content <origin-id> <file-name> <n-blocks>
//   request <client> <file-name> <tick>
//   kill <node> <tick>
struct Scenario {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::vector<ContentSpec> contents;
    std::vector<RequestSpec> requests;
    std::vector<KillSpec> kills;

    static Scenario parse(std::istream& in);
    static Scenario parse_text(std::string_view text);
};

struct RequestRecord {
    std::uint64_t id = 0;
    std::int64_t issue = 0;
    std::int64_t complete = -1;  // -1 = failed
    int hops = 0;
    std::string source;  // answering node, empty on failure
    bool ok = false;
};

struct Metrics {
    std::map<std::string, std::uint64_t> origin_transmissions;
    std::map<std::string, std::uint64_t> cache_hits;
    std::map<std::pair<std::string, std::string>, std::uint64_t>
        link_transmissions;  // data-block copies per link, endpoints sorted
    std::uint64_t total_hops = 0;
    std::uint64_t completed = 0;
    std::uint64_t failed = 0;
    std::vector<RequestRecord> requests;
    std::uint64_t seed = 0;

    std::uint64_t origin_total() const;
    std::uint64_t cache_hit_total() const;
    std::string report() const;  // flat key=value text, stable ordering
    std::string csv() const;     // request-id, issue, complete, hops, source
};

// Validated topology with per-block routing precomputed toward origins.
class SimNetwork {
public:
    explicit SimNetwork(const Scenario& scenario);

    // Deterministic event-driven execution: a request walks toward the
    // origin; the first alive node on the path holding the block answers and
    // the response populates every router cache on the return path.
    Metrics run(std::uint64_t seed, bool caching = true) const;

    // Location-addressed baseline: identical engine, caches disabled.
    Metrics run_baseline(std::uint64_t seed) const { return run(seed, false); }

private:
    struct Node;
    Scenario scenario_;
};

}  // namespace netsim
}  // namespace cane
