// End-to-end acceptance suite. Each criterion prints one pass/fail line;
// the process exits nonzero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cane/appdir.hpp"
#include "cane/identity.hpp"
#include "cane/manifest.hpp"
#include "cane/netsim.hpp"
#include "cane/scene.hpp"
#include "cane/store.hpp"
#include "cane/tree.hpp"
#include "cane/types.hpp"

namespace fs = std::filesystem;
using namespace cane;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const fs::path& workdir, const std::string& args) {
    std::string cmd = "cd '" + workdir.string() + "' && '" + CANE_CLI_PATH +
                      "' " + args + " 2>&1";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
    int status = pclose(pipe);
    r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return r;
}

std::uint64_t parse_counter(const std::string& text, const std::string& key) {
    auto pos = text.find(key + "=");
    if (pos == std::string::npos) return ~0ull;
    return std::stoull(text.substr(pos + key.size() + 1));
}

void write_file_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("cane-acc-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
};

// --- criterion 1: collision formula ---------------------------------------

long double exact_collision(std::uint64_t n, int bits) {
    long double outcomes = std::pow(2.0L, bits);
    if (static_cast<long double>(n) > outcomes) return 1.0L;
    long double p_distinct = 1.0L;
    for (std::uint64_t i = 1; i < n; ++i)
        p_distinct *= 1.0L - static_cast<long double>(i) / outcomes;
    return 1.0L - p_distinct;
}

Check criterion_collision() {
    Check c;
    auto start = std::chrono::steady_clock::now();

    double p = collision_probability(std::pow(2.0, 140), 512);
    c.expect(p < 1e-70, "p(2^140, 512) = " + std::to_string(p));
    c.expect(p > 0, "probability must be positive");

    for (int bits = 1; bits <= 20 && c.ok; ++bits) {
        for (std::uint64_t n = 0; n <= 1024; n = n < 64 ? n + 1 : n * 2) {
            long double exact = exact_collision(n, bits);
            double got = collision_probability(static_cast<double>(n), bits);
            long double err = std::fabs(static_cast<long double>(got) - exact);
            bool close = exact == 0.0L ? got == 0.0
                                       : err <= 0.10L * exact;
            c.expect(close, "n=" + std::to_string(n) + " bits=" +
                                std::to_string(bits) + " got=" +
                                std::to_string(got));
            if (!c.ok) break;
        }
    }

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(1), "exceeded 1 s budget");
    return c;
}

// --- criterion 2: dedup triad via the command line ------------------------

Check criterion_dedup() {
    Check c;
    auto start = std::chrono::steady_clock::now();
    fs::path dir = fresh_dir("dedup");

    auto cli = [&](const std::string& args) { return run_cli(dir, args); };
    auto data_blocks = [&]() { return parse_counter(cli("stats").output, "data_blocks"); };

    c.expect(cli("init --fixed-clock").exit_code == 0, "init failed");

    std::uint64_t before = data_blocks();
    write_file_bytes(dir / "zeros.bin", std::string(1 << 20, '\0'));
    c.expect(cli("put zeros.bin zeros --stamp 2005-07-14T12:00:00.000000Z.0")
                     .exit_code == 0,
             "put zeros failed");
    c.expect(data_blocks() == before + 1,
             "1 MiB of zeros should add exactly 1 data block, added " +
                 std::to_string(data_blocks() - before));

    std::string big;
    for (int i = 0; i < 256; ++i)
        big += std::string(4096, static_cast<char>(i));
    write_file_bytes(dir / "big.bin", big);
    c.expect(cli("put big.bin big --stamp 2005-07-14T12:00:01.000000Z.0")
                     .exit_code == 0,
             "put big failed");

    before = data_blocks();
    big[100 * 4096] = '\xff';  // touch one chunk only
    write_file_bytes(dir / "big.bin", big);
    c.expect(cli("put big.bin big --stamp 2005-07-14T12:00:02.000000Z.0")
                     .exit_code == 0,
             "put edited big failed");
    c.expect(data_blocks() == before + 1,
             "single-chunk edit should add exactly 1 data block, added " +
                 std::to_string(data_blocks() - before));

    before = data_blocks();
    c.expect(cli("revert / 2005-07-14T12:00:02.000000Z.0 "
                 "--stamp 2005-07-14T12:00:03.000000Z.0")
                     .exit_code == 0,
             "revert failed");
    c.expect(data_blocks() == before,
             "revert should add exactly 0 data blocks, added " +
                 std::to_string(data_blocks() - before));

    big[100 * 4096] = 100;  // the pre-edit byte
    c.expect(cli("cat big").output == big, "revert did not restore content");

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(5), "exceeded 5 s budget");
    fs::remove_all(dir);
    return c;
}

// --- criterion 3: history mechanism ---------------------------------------

Check criterion_history() {
    Check c;
    auto start = std::chrono::steady_clock::now();

    for (std::uint32_t seed = 0; seed < 100 && c.ok; ++seed) {
        std::mt19937 rng(seed);
        MemStore store;
        TreeHandle initial = create_root(store);
        TreeHandle t = initial;
        int k = 1 + static_cast<int>(rng() % 50);

        std::vector<TreeHandle> roots;                       // after each write
        std::vector<std::map<std::string, std::string>> snaps;
        std::map<std::string, std::string> live;
        std::int64_t base_us = 1121350997000000;
        for (int i = 0; i < k; ++i) {
            std::string name = "f" + std::to_string(rng() % 8);
            std::string bytes(rng() % 200, '\0');
            for (auto& b : bytes) b = static_cast<char>(rng());
            t = write_file(store, t, name, bytes, {base_us + i * 1000, 0});
            live[name] = bytes;
            roots.push_back(t);
            snaps.push_back(live);
        }

        // Resolving "." k times from the head reaches the initial root.
        TreeHandle walk = t;
        for (int i = 0; i < k; ++i) walk = {resolve(store, walk, ".")};
        c.expect(walk == initial, "seed " + std::to_string(seed) +
                                      ": \".\" chain missed the initial root");

        // "..." lists exactly k stamps in strictly increasing order.
        auto hist = history(store, t, "/");
        c.expect(hist.size() == static_cast<std::size_t>(k),
                 "seed " + std::to_string(seed) + ": history size " +
                     std::to_string(hist.size()) + " != " + std::to_string(k));
        for (std::size_t i = 1; i < hist.size(); ++i)
            c.expect(hist[i - 1].first < hist[i].first,
                     "seed " + std::to_string(seed) + ": stamps out of order");

        // Every historical root re-reads byte-identically.
        for (int i = 0; i < k && c.ok; ++i)
            for (const auto& [name, bytes] : snaps[i])
                c.expect(read_file(store, roots[i], name) == bytes,
                         "seed " + std::to_string(seed) +
                             ": historical read mismatch at version " +
                             std::to_string(i));
    }

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(30), "exceeded 30 s budget");
    return c;
}

// --- criterion 4: tamper evidence -----------------------------------------

Check criterion_tamper() {
    Check c;
    auto start = std::chrono::steady_clock::now();

    Identity signer = generate_identity(std::string_view("acceptance-signer"));
    BlockId root = hash_bytes("the manifest under signature");
    std::string encoded = sign_manifest(signer, root).encode();

    std::mt19937 rng(4242);
    int rejections = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string mutated = encoded;
        std::size_t bit = rng() % (mutated.size() * 8);
        mutated[bit / 8] ^= static_cast<char>(1u << (bit % 8));
        bool accepted;
        try {
            accepted = verify_manifest(SignedManifest::decode(mutated));
        } catch (const CaneError&) {
            accepted = false;  // refusing to decode is a rejection
        }
        if (!accepted) ++rejections;
    }
    c.expect(rejections == 1000, std::to_string(1000 - rejections) +
                                     " perturbations were falsely accepted");
    c.expect(verify_manifest(SignedManifest::decode(encoded)),
             "the untouched manifest must verify");

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(10), "exceeded 10 s budget");
    return c;
}

// --- criterion 5: certificate windows -------------------------------------

Check criterion_certificates() {
    Check c;

    Identity listed = generate_identity(std::string_view("listed"));
    Identity group = generate_identity(std::string_view("group"));
    Identity member = generate_identity(std::string_view("member"));
    Identity stranger = generate_identity(std::string_view("stranger"));

    const std::int64_t t0 = 1121350997000000, t1 = t0 + 3600000000;
    Acl acl;
    acl.readers = {listed.pub, group.pub};
    acl.writers = {listed.pub, group.pub};
    Certificate cert = issue_certificate(group, member.pub, t0, t1);
    std::vector<Certificate> member_certs = {cert};

    struct Probe { const char* name; std::int64_t at; bool in_window; };
    const Probe probes[] = {
        {"before", t0 - 1000, false}, {"start", t0, true},
        {"mid", (t0 + t1) / 2, true}, {"end-eps", t1 - 1, true},
        {"end", t1, false},           {"after", t1 + 1000, false},
    };
    for (const auto& probe : probes) {
        for (AccessMode mode : {AccessMode::read, AccessMode::write}) {
            const char* mode_name = mode == AccessMode::read ? "read" : "write";
            auto at = [&](const PublicKey& who,
                          std::span<const Certificate> certs) {
                return check_access(acl, who, certs, std::nullopt, mode,
                                    probe.at);
            };
            c.expect(at(listed.pub, {}).allowed,
                     std::string("listed denied ") + mode_name + " at " +
                         probe.name);
            AccessDecision via_cert = at(member.pub, member_certs);
            c.expect(via_cert.allowed == probe.in_window,
                     std::string("group-cert ") + mode_name + " at " +
                         probe.name + " should be " +
                         (probe.in_window ? "allowed" : "denied"));
            if (!probe.in_window)
                c.expect(via_cert.reason == DenyReason::cert_expired,
                         std::string("out-of-window denial at ") + probe.name +
                             " must cite the window");
            c.expect(!at(stranger.pub, {}).allowed,
                     std::string("stranger allowed ") + mode_name + " at " +
                         probe.name);
        }
    }
    return c;
}

// --- criterion 6: appdir laziness -----------------------------------------

TreeHandle platform_tree(BlockStore& store, const std::string& tag,
                         const std::string& salt, int files) {
    TreeHandle t = create_root(store);
    std::int64_t base = 1121350997000000;
    for (int i = 0; i < files; ++i) {
        std::string body(9000, static_cast<char>('a' + i));
        body += salt + tag + std::to_string(i);
        t = write_file(store, t, "bin" + std::to_string(i), body,
                       {base + i * 1000, 0});
    }
    return t;
}

Check criterion_appdir() {
    Check c;
    MemStore source;

    const std::vector<std::string> tags = {"p0", "p1", "p2", "p3",
                                           "p4", "p5", "p6"};
    std::map<std::string, TreeHandle> lib_trees, fat_trees, thin_trees;
    for (const auto& tag : tags) {
        lib_trees[tag] = platform_tree(source, tag, "lib", 2);
        fat_trees[tag] = platform_tree(source, tag, "app", 3);
    }
    thin_trees["p3"] = fat_trees["p3"];

    BlockId lib = build_appdir(source, "lib", lib_trees, {});
    BlockId fat = build_appdir(source, "app", fat_trees, {lib});
    BlockId thin = build_appdir(source, "app", thin_trees, {lib});

    MemStore local_fat, local_thin;
    FetchLog fat_log = materialize(local_fat, fat, "p3", source);
    FetchLog thin_log = materialize(local_thin, thin, "p3", source);
    c.expect(fat_log.bytes_fetched == thin_log.bytes_fetched,
             "fat install fetched " + std::to_string(fat_log.bytes_fetched) +
                 " bytes, 1-platform build " +
                 std::to_string(thin_log.bytes_fetched));

    std::set<BlockId> once(fat_log.requested.begin(), fat_log.requested.end());
    c.expect(once.size() == fat_log.requested.size(),
             "a block was fetched more than once");

    // Second app sharing the lib dependency fetches exactly the closure
    // set-difference.
    std::map<std::string, TreeHandle> other_trees;
    for (const auto& tag : tags)
        other_trees[tag] = platform_tree(source, tag, "other", 3);
    BlockId other = build_appdir(source, "other", other_trees, {lib});

    FetchLog second = materialize(local_fat, other, "p3", source);
    std::set<BlockId> got(second.requested.begin(), second.requested.end());
    std::set<BlockId> closure_other = closure(source, other, "p3");
    std::set<BlockId> closure_fat = closure(source, fat, "p3");
    std::set<BlockId> want;
    std::set_difference(closure_other.begin(), closure_other.end(),
                        closure_fat.begin(), closure_fat.end(),
                        std::inserter(want, want.begin()));
    c.expect(got == want, "second install fetched " +
                              std::to_string(got.size()) +
                              " blocks, closure difference has " +
                              std::to_string(want.size()));
    return c;
}

// --- criteria 7 and 8: cooperation and resilience -------------------------

std::string flash_crowd_scenario() {
    std::ostringstream s;
    s << "node origin origin\n"
      << "node router router\n"
      << "link origin router 1\n"
      << "content origin movie 100\n";
    for (int i = 0; i < 1000; ++i) {
        s << "node c" << i << " client\n"
          << "link router c" << i << " 1\n"
          << "request c" << i << " movie 0\n";
    }
    return s.str();
}

Check criterion_cooperation() {
    Check c;
    auto start = std::chrono::steady_clock::now();

    netsim::Scenario sc = netsim::Scenario::parse_text(flash_crowd_scenario());
    netsim::SimNetwork net(sc);

    netsim::Metrics cached = net.run(7);
    netsim::Metrics baseline = net.run_baseline(7);
    c.expect(cached.origin_total() == 100,
             "caching run: origin sent " +
                 std::to_string(cached.origin_total()) + " blocks, want 100");
    c.expect(baseline.origin_total() == 100000,
             "baseline: origin sent " +
                 std::to_string(baseline.origin_total()) +
                 " blocks, want 100000");
    c.expect(cached.failed == 0 && baseline.failed == 0, "requests failed");
    c.expect(net.run(7).report() == cached.report(),
             "repeated run under the same seed diverged");

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(10), "exceeded 10 s budget");
    return c;
}

Check criterion_resilience() {
    Check c;

    std::ostringstream s;
    s << "node origin origin\n"
      << "node router router\n"
      << "link origin router 1\n"
      << "content origin movie 50\n"
      << "node warm client\n"
      << "link router warm 1\n"
      << "request warm movie 0\n"
      << "kill origin 5\n";
    for (int i = 0; i < 500; ++i) {
        s << "node c" << i << " client\n"
          << "link router c" << i << " 1\n"
          << "request c" << i << " movie 10\n";
    }

    // The engine accounts per block: 501 file requests over 50 blocks each.
    netsim::SimNetwork net{netsim::Scenario::parse_text(s.str())};
    netsim::Metrics m = net.run(1);
    c.expect(m.failed == 0, std::to_string(m.failed) + " block requests failed");
    c.expect(m.completed == 501 * 50,
             "completed " + std::to_string(m.completed) + " of " +
                 std::to_string(501 * 50) + " block requests");

    netsim::Metrics dark = net.run_baseline(1);
    c.expect(dark.failed == 500 * 50,
             "baseline should lose all 500 post-kill requests, lost " +
                 std::to_string(dark.failed));
    return c;
}

// --- criterion 9: render memoization --------------------------------------

scene::ElementSpec make_elem(const std::string& kind, int x, int y, int w,
                             int h, const std::string& label = "") {
    scene::ElementSpec e;
    e.kind = kind;
    e.attrs = {{"x", std::to_string(x)}, {"y", std::to_string(y)},
               {"w", std::to_string(w)}, {"h", std::to_string(h)}};
    if (!label.empty()) e.attrs["label"] = label;
    return e;
}

Check criterion_render() {
    Check c;

    {
        MemStore store;
        scene::ElementSpec win = make_elem("window", 0, 0, 24, 8, "dup");
        win.children["btn_a"] = make_elem("button", 2, 2, 6, 1, "go");
        win.children["btn_b"] = make_elem("button", 2, 2, 6, 1, "go");
        TreeHandle t = scene::mount_element(store, create_root(store), "", win,
                                            {1121350997000000, 0});
        scene::RenderCache cache;
        auto result = scene::render(store, t, cache);
        c.expect(result.render_calls == 2,
                 "duplicate-button scene took " +
                     std::to_string(result.render_calls) +
                     " render calls, want 2 (window + one shared button)");
        c.expect(cache.hits >= 1, "duplicate button never hit the cache");
    }

    {
        MemStore store;
        scene::ElementSpec win = make_elem("window", 0, 0, 24, 8, "move");
        win.children["label"] = make_elem("text", 2, 2, 5, 1, "still");
        TreeHandle t = scene::mount_element(store, create_root(store), "", win,
                                            {1121350997000000, 0});
        scene::RenderCache cache;
        scene::render(store, t, cache);
        t = write_file(store, t, "x", "3", {1121350998000000, 0});
        auto moved = scene::render(store, t, cache);
        c.expect(moved.render_calls == 1,
                 "window move took " + std::to_string(moved.render_calls) +
                     " render calls, want 1");
    }

    std::mt19937 rng(99);
    const char* kinds[] = {"text", "button", "image", "pane"};
    for (int round = 0; round < 100 && c.ok; ++round) {
        MemStore store;
        scene::ElementSpec win =
            make_elem("window", 0, 0, 8 + static_cast<int>(rng() % 24),
                      4 + static_cast<int>(rng() % 12),
                      "w" + std::to_string(round));
        int children = static_cast<int>(rng() % 6);
        for (int i = 0; i < children; ++i) {
            scene::ElementSpec child = make_elem(
                kinds[rng() % 4], static_cast<int>(rng() % 20),
                static_cast<int>(rng() % 10), 1 + static_cast<int>(rng() % 12),
                1 + static_cast<int>(rng() % 5),
                "t" + std::to_string(rng() % 1000));
            if (rng() % 3 == 0)
                child.children["inner"] =
                    make_elem(kinds[rng() % 4], static_cast<int>(rng() % 4),
                              static_cast<int>(rng() % 3),
                              1 + static_cast<int>(rng() % 6), 1);
            win.children["e" + std::to_string(i)] = std::move(child);
        }
        TreeHandle t = scene::mount_element(store, create_root(store), "", win,
                                            {1121350997000000, 0});
        scene::RenderCache warm;
        std::string cold = scene::to_text(scene::render(store, t, warm).grid);
        std::string cached = scene::to_text(scene::render(store, t, warm).grid);
        c.expect(cold == cached,
                 "round " + std::to_string(round) +
                     ": cached grid differs from the cold render");
    }
    return c;
}

// --- criterion 10: command-line determinism -------------------------------

std::string scripted_transcript(const fs::path& dir) {
    std::string out;
    auto step = [&](const std::string& args) {
        CliResult r = run_cli(dir, args);
        out += "$ " + args + "\n" + r.output +
               "exit=" + std::to_string(r.exit_code) + "\n";
    };

    write_file_bytes(dir / "hello.txt", "hello, content-addressed world\n");
    write_file_bytes(dir / "scenario.txt",
                     "node o origin\nnode r router\nnode c client\n"
                     "link o r 1\nlink r c 1\ncontent o film 5\n"
                     "request c film 0\nrequest c film 1\n");

    step("init --fixed-clock");
    step("keygen --seed deterministic-seed --out id.key");
    step("put hello.txt greeting --stamp 2005-07-14T12:00:00.000000Z.0");
    step("put hello.txt docs/copy --stamp 2005-07-14T12:00:01.000000Z.0");
    step("cat greeting");
    step("ls / --porcelain");
    step("ls docs --porcelain");
    step("log /");
    step("stats");
    step("sign --key id.key --out root.sig");
    step("verify root.sig");
    step("cert issue --group id.key --member "
         "$('" CANE_CLI_PATH "' -C . keygen --seed member-seed --out m.key) "
         "--from 2005-07-14T00:00:00.000000Z --to 2005-07-15T00:00:00.000000Z "
         "--out m.cert");
    step("cert check m.cert --at 2005-07-14T12:00:00.000000Z");
    step("sim run scenario.txt --seed 5 --csv sim.csv");
    step("sim run scenario.txt --seed 5 --baseline");
    step("revert / 2005-07-14T12:00:01.000000Z.0 "
         "--stamp 2005-07-14T12:00:02.000000Z.0");
    step("log /");

    std::ifstream csv(dir / "sim.csv", std::ios::binary);
    std::ostringstream buf;
    buf << csv.rdbuf();
    out += "csv:\n" + buf.str();
    return out;
}

Check criterion_determinism() {
    Check c;
    fs::path a = fresh_dir("det-a"), b = fresh_dir("det-b");
    std::string ta = scripted_transcript(a);
    std::string tb = scripted_transcript(b);
    c.expect(!ta.empty(), "empty transcript");
    c.expect(ta.find("exit=0") != std::string::npos, "scripted commands failed");
    c.expect(ta == tb, "transcripts differ between identical runs");
    fs::remove_all(a);
    fs::remove_all(b);
    return c;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Check()> run;
    };
    const Criterion criteria[] = {
        {"collision formula", criterion_collision},
        {"dedup triad", criterion_dedup},
        {"history mechanism", criterion_history},
        {"tamper evidence", criterion_tamper},
        {"certificate windows", criterion_certificates},
        {"appdir laziness", criterion_appdir},
        {"cooperative caching", criterion_cooperation},
        {"origin-loss resilience", criterion_resilience},
        {"render memoization", criterion_render},
        {"command-line determinism", criterion_determinism},
    };

    int failures = 0;
    int index = 0;
    for (const auto& criterion : criteria) {
        ++index;
        Check c;
        try {
            c = criterion.run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        std::cout << (c.ok ? "PASS" : "FAIL") << " " << index << ". "
                  << criterion.name;
        if (!c.ok) {
            std::cout << " - " << c.detail;
            ++failures;
        }
        std::cout << "\n" << std::flush;
    }
    return failures == 0 ? 0 : 1;
}
