// cane - content-addressed environment: store, versioned trees, identities,
// appdirs, network simulation, and file-mapped scenes from one entry point.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

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

constexpr const char* kWorkspaceFile = "cane.ws";

struct Workspace {
    fs::path dir;
    std::map<std::string, std::string> kv;

    std::string get(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) fail(Err::bad_spec, "workspace missing " + key);
        return it->second;
    }

    static Workspace load(const fs::path& dir) {
        Workspace ws;
        ws.dir = dir;
        std::ifstream in(dir / kWorkspaceFile);
        if (!in) fail(Err::not_found, "no workspace here (run 'cane init')");
        std::string line;
        while (std::getline(in, line)) {
            auto eq = line.find('=');
            if (eq != std::string::npos)
                ws.kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return ws;
    }

    void save() const {
        std::ofstream out(dir / kWorkspaceFile, std::ios::trunc);
        for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
        if (!out) fail(Err::io, "cannot write workspace file");
    }
};

VersionStamp now_stamp() {
    auto now = std::chrono::system_clock::now();
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                  now.time_since_epoch())
                  .count();
    return {us, 0};
}

// Fixed clock mode demands explicit stamps so runs are reproducible.
VersionStamp pick_stamp(const Workspace& ws, const std::string& stamp_arg) {
    if (!stamp_arg.empty()) return VersionStamp::parse(stamp_arg);
    if (ws.get("clock_mode") == "fixed")
        fail(Err::bad_stamp, "fixed clock requires --stamp on mutating commands");
    return now_stamp();
}

std::string read_whole_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(Err::not_found, "cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_whole_file(const fs::path& p, std::string_view bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Err::io, "cannot write " + p.string());
}

struct Session {
    Workspace ws;
    FsStore store;
    TreeHandle root;

    static Session open(const fs::path& dir, const std::string& root_override) {
        Workspace ws = Workspace::load(dir);
        FsStore store = FsStore::open(dir / ws.get("store_path"));
        BlockId root = root_override.empty()
                           ? BlockId::from_hex(ws.get("current_root"))
                           : BlockId::from_hex(root_override);
        return {std::move(ws), std::move(store), {root}};
    }

    // Compare-and-swap against the workspace file: a concurrent update
    // surfaces as a fork for detect_forks, never as silent loss.
    void commit_root(TreeHandle new_root) {
        Workspace current = Workspace::load(ws.dir);
        if (current.get("current_root") != ws.get("current_root"))
            fail(Err::bad_spec,
                 "workspace root moved concurrently; rerun against the new root");
        ws.kv["current_root"] = new_root.root.hex();
        ws.save();
        std::cout << new_root.root.hex() << "\n";
    }
};

Identity load_identity(const fs::path& p) {
    std::ifstream in(p);
    if (!in) fail(Err::not_found, "cannot read identity " + p.string());
    std::string line, secret_hex;
    while (std::getline(in, line)) {
        if (line.rfind("secret=", 0) == 0) secret_hex = line.substr(7);
    }
    if (secret_hex.size() != 64)
        fail(Err::missing_key, "identity file has no usable secret");
    std::vector<std::uint8_t> secret;
    for (std::size_t i = 0; i < secret_hex.size(); i += 2)
        secret.push_back(static_cast<std::uint8_t>(
            std::stoi(secret_hex.substr(i, 2), nullptr, 16)));
    return identity_from_secret(secret);
}

void save_identity(const fs::path& p, const Identity& id) {
    std::ostringstream out;
    out << "alg=ed25519\n"
        << "public=" << id.pub.hex() << "\n"
        << "secret=" << to_hex(id.secret->data(), id.secret->size()) << "\n";
    write_whole_file(p, out.str());
}

PublicKey parse_pubkey_hex(const std::string& hex) {
    if (hex.size() != 64) fail(Err::bad_encoding, "public key must be 64 hex chars");
    PublicKey key;
    for (std::size_t i = 0; i < hex.size(); i += 2)
        key.bytes.push_back(static_cast<std::uint8_t>(
            std::stoi(hex.substr(i, 2), nullptr, 16)));
    return key;
}

std::int64_t parse_time_us(const std::string& text) {
    // Accepts a stamp (without .seq it parses as seq 0) or raw microseconds.
    if (text.find('T') != std::string::npos)
        return VersionStamp::parse(text.find("Z.") != std::string::npos
                                       ? text
                                       : text + ".0")
            .utc_micros;
    return std::stoll(text);
}

const char* kind_name(EntryKind kind) {
    switch (kind) {
        case EntryKind::file: return "file";
        case EntryKind::dir: return "dir";
        case EntryKind::lwf: return "lwf";
        case EntryKind::receptor: return "receptor";
    }
    return "?";
}

int exit_code_for(const CaneError& e) {
    switch (e.kind()) {
        case Err::not_found: return 3;
        case Err::corruption: return 4;
        case Err::access_denied: return 5;
        case Err::bad_spec:
        case Err::bad_scene: return 6;
        default: return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cane - content addressed environment"};
    app.require_subcommand(1);
    std::string ws_dir = ".";
    app.add_option("--workspace,-C", ws_dir, "workspace directory");

    // init
    auto* cmd_init = app.add_subcommand("init", "create a store and workspace");
    std::string init_store = "store";
    bool init_fixed_clock = false;
    std::size_t init_chunk = 4096;
    cmd_init->add_option("--store", init_store, "store directory name");
    cmd_init->add_option("--chunk-size", init_chunk, "chunk size in bytes");
    cmd_init->add_flag("--fixed-clock", init_fixed_clock,
                       "require explicit --stamp on mutating commands");

    // put
    auto* cmd_put = app.add_subcommand("put", "store a file at a tree path");
    std::string put_file, put_path, put_stamp, put_root;
    bool put_receptor = false;
    cmd_put->add_option("file", put_file)->required();
    cmd_put->add_option("path", put_path)->required();
    cmd_put->add_option("--stamp", put_stamp, "version stamp");
    cmd_put->add_option("--root", put_root, "start from this root instead");
    cmd_put->add_flag("--receptor", put_receptor, "create an event receptor");

    // cat
    auto* cmd_cat = app.add_subcommand("cat", "print file bytes");
    std::string cat_path, cat_root;
    cmd_cat->add_option("path", cat_path)->required();
    cmd_cat->add_option("--root", cat_root);

    // ls
    auto* cmd_ls = app.add_subcommand("ls", "list a directory");
    std::string ls_path = "/", ls_root;
    bool ls_porcelain = false;
    cmd_ls->add_option("path", ls_path);
    cmd_ls->add_option("--root", ls_root);
    cmd_ls->add_flag("--porcelain", ls_porcelain, "key=value output");

    // log
    auto* cmd_log = app.add_subcommand("log", "show directory history");
    std::string log_path = "/", log_root;
    cmd_log->add_option("path", log_path);
    cmd_log->add_option("--root", log_root);

    // revert
    auto* cmd_revert = app.add_subcommand("revert", "restore a past version");
    std::string rev_path, rev_stamp, rev_new_stamp, rev_root;
    cmd_revert->add_option("path", rev_path)->required();
    cmd_revert->add_option("at", rev_stamp, "stamp of the mutation to undo")
        ->required();
    cmd_revert->add_option("--stamp", rev_new_stamp, "stamp for the revert itself");
    cmd_revert->add_option("--root", rev_root);

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "store counters");

    // keygen
    auto* cmd_keygen = app.add_subcommand("keygen", "generate an identity");
    std::string key_seed, key_out = "identity.key";
    cmd_keygen->add_option("--seed", key_seed, "deterministic seed (test mode)");
    cmd_keygen->add_option("--out", key_out, "identity file");

    // sign
    auto* cmd_sign = app.add_subcommand("sign", "sign a manifest root");
    std::string sign_key, sign_root, sign_out = "manifest.sig";
    cmd_sign->add_option("--key", sign_key, "identity file");
    cmd_sign->add_option("--root", sign_root, "root to sign (default current)");
    cmd_sign->add_option("--out", sign_out);

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "verify a signed manifest");
    std::string verify_sig, verify_root;
    cmd_verify->add_option("sigfile", verify_sig)->required();
    cmd_verify->add_option("--root", verify_root,
                           "expected root (default: the signed one)");

    // cert issue / check
    auto* cmd_cert = app.add_subcommand("cert", "group certificates");
    cmd_cert->require_subcommand(1);
    auto* cert_issue = cmd_cert->add_subcommand("issue", "issue a certificate");
    std::string ci_group, ci_member, ci_from, ci_to, ci_out = "member.cert";
    cert_issue->add_option("--group", ci_group, "group identity file")->required();
    cert_issue->add_option("--member", ci_member, "member public key (hex)")
        ->required();
    cert_issue->add_option("--from", ci_from, "window start")->required();
    cert_issue->add_option("--to", ci_to, "window end")->required();
    cert_issue->add_option("--out", ci_out);
    auto* cert_check = cmd_cert->add_subcommand("check", "check a certificate");
    std::string cc_file, cc_at;
    cert_check->add_option("certfile", cc_file)->required();
    cert_check->add_option("--at", cc_at, "check time (default: now)");

    // appdir
    auto* cmd_appdir = app.add_subcommand("appdir", "fat recursive appdirs");
    cmd_appdir->require_subcommand(1);
    auto* ad_build = cmd_appdir->add_subcommand("build", "build an appdir");
    std::string adb_name;
    std::vector<std::string> adb_platforms, adb_deps;
    ad_build->add_option("--name", adb_name)->required();
    ad_build->add_option("--platform", adb_platforms,
                         "tag=<root-hex>, repeatable")
        ->required();
    ad_build->add_option("--dep", adb_deps, "dependency appdir id, repeatable");
    auto* ad_closure = cmd_appdir->add_subcommand("closure", "list closure blocks");
    std::string adc_id, adc_platform;
    ad_closure->add_option("appdir", adc_id)->required();
    ad_closure->add_option("platform", adc_platform)->required();
    auto* ad_mat = cmd_appdir->add_subcommand("materialize", "lazy install");
    std::string adm_id, adm_platform, adm_from;
    ad_mat->add_option("appdir", adm_id)->required();
    ad_mat->add_option("platform", adm_platform)->required();
    ad_mat->add_option("--from", adm_from, "source store directory")->required();

    // sim
    auto* cmd_sim = app.add_subcommand("sim", "network simulator");
    cmd_sim->require_subcommand(1);
    auto* sim_run = cmd_sim->add_subcommand("run", "run a scenario");
    std::string sim_file, sim_csv;
    std::uint64_t sim_seed = 0;
    bool sim_baseline = false;
    sim_run->add_option("scenario", sim_file)->required();
    sim_run->add_option("--seed", sim_seed);
    sim_run->add_flag("--baseline", sim_baseline,
                      "location-addressed baseline (no caching)");
    sim_run->add_option("--csv", sim_csv, "write per-request records here");

    // scene
    auto* cmd_scene = app.add_subcommand("scene", "file-mapped interfaces");
    cmd_scene->require_subcommand(1);
    auto* sc_render = cmd_scene->add_subcommand("render", "render to text");
    std::string scr_path, scr_root;
    sc_render->add_option("--path", scr_path, "scene subtree (default root)");
    sc_render->add_option("--root", scr_root);
    auto* sc_events = cmd_scene->add_subcommand("events", "print the event map");
    std::string sce_path, sce_root;
    sc_events->add_option("--path", sce_path);
    sc_events->add_option("--root", sce_root);
    auto* sc_click = cmd_scene->add_subcommand("click", "deliver a click event");
    int click_x = 0, click_y = 0;
    std::string click_payload = "click", click_stamp, click_root, click_path;
    sc_click->add_option("x", click_x)->required();
    sc_click->add_option("y", click_y)->required();
    sc_click->add_option("--payload", click_payload);
    sc_click->add_option("--stamp", click_stamp);
    sc_click->add_option("--path", click_path, "scene subtree (default root)");
    sc_click->add_option("--root", click_root);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        fs::path dir = ws_dir;

        if (*cmd_init) {
            FsStore store = FsStore::create(dir / init_store, init_chunk);
            TreeHandle root = create_root(store);
            Workspace ws;
            ws.dir = dir;
            ws.kv["store_path"] = init_store;
            ws.kv["current_root"] = root.root.hex();
            ws.kv["identity_path"] = "identity.key";
            ws.kv["clock_mode"] = init_fixed_clock ? "fixed" : "real";
            ws.save();
            std::cout << root.root.hex() << "\n";
            return 0;
        }

        if (*cmd_put) {
            Session s = Session::open(dir, put_root);
            VersionStamp stamp = pick_stamp(s.ws, put_stamp);
            WriteOptions opts;
            opts.receptor = put_receptor;
            TreeHandle next = write_file(s.store, s.root, put_path,
                                         read_whole_file(put_file), stamp, opts);
            s.commit_root(next);
            return 0;
        }

        if (*cmd_cat) {
            Session s = Session::open(dir, cat_root);
            std::cout << read_file(s.store, s.root, cat_path);
            return 0;
        }

        if (*cmd_ls) {
            Session s = Session::open(dir, ls_root);
            for (const auto& e : list_dir(s.store, s.root, ls_path)) {
                if (ls_porcelain) {
                    std::cout << "name=" << e.name << " kind=" << kind_name(e.kind);
                    if (e.kind == EntryKind::lwf)
                        std::cout << " size=" << e.inline_bytes.size();
                    else
                        std::cout << " target=" << e.target.hex();
                    std::cout << "\n";
                } else {
                    std::cout << kind_name(e.kind) << "\t" << e.name << "\n";
                }
            }
            return 0;
        }

        if (*cmd_log) {
            Session s = Session::open(dir, log_root);
            for (const auto& [stamp, id] : history(s.store, s.root, log_path))
                std::cout << stamp.str() << " " << id.hex() << "\n";
            return 0;
        }

        if (*cmd_revert) {
            Session s = Session::open(dir, rev_root);
            VersionStamp target = VersionStamp::parse(rev_stamp);
            VersionStamp stamp = pick_stamp(s.ws, rev_new_stamp);
            TreeHandle next = revert(s.store, s.root, rev_path, target, stamp);
            s.commit_root(next);
            return 0;
        }

        if (*cmd_stats) {
            Session s = Session::open(dir, "");
            StoreStats st = s.store.stats();
            std::cout << "unique_blocks=" << st.unique_blocks << "\n"
                      << "logical_bytes=" << st.logical_bytes << "\n"
                      << "physical_bytes=" << st.physical_bytes << "\n"
                      << "data_blocks=" << st.data_blocks << "\n"
                      << "manifest_blocks=" << st.manifest_blocks << "\n";
            return 0;
        }

        if (*cmd_keygen) {
            Identity id = key_seed.empty()
                              ? generate_identity()
                              : generate_identity(std::string_view(key_seed));
            save_identity(dir / key_out, id);
            std::cout << id.pub.hex() << "\n";
            return 0;
        }

        if (*cmd_sign) {
            Session s = Session::open(dir, sign_root);
            fs::path key_path =
                sign_key.empty() ? dir / s.ws.get("identity_path") : fs::path(sign_key);
            Identity id = load_identity(key_path);
            SignedManifest sm = sign_manifest(id, s.root.root);
            write_whole_file(dir / sign_out, sm.encode());
            std::cout << "signed " << s.root.root.hex() << "\n";
            return 0;
        }

        if (*cmd_verify) {
            SignedManifest sm =
                SignedManifest::decode(read_whole_file(dir / verify_sig));
            bool ok = verify_manifest(sm);
            if (ok && !verify_root.empty())
                ok = sm.manifest == BlockId::from_hex(verify_root);
            std::cout << (ok ? "accept" : "reject") << "\n";
            return ok ? 0 : 5;
        }

        if (*cert_issue) {
            Identity group = load_identity(dir / ci_group);
            Certificate cert =
                issue_certificate(group, parse_pubkey_hex(ci_member),
                                  parse_time_us(ci_from), parse_time_us(ci_to));
            write_whole_file(dir / ci_out, cert.encode());
            std::cout << "issued\n";
            return 0;
        }

        if (*cert_check) {
            Certificate cert = Certificate::decode(read_whole_file(dir / cc_file));
            std::int64_t at =
                cc_at.empty() ? now_stamp().utc_micros : parse_time_us(cc_at);
            if (!verify_certificate(cert)) {
                std::cout << "reject signature\n";
                return 5;
            }
            if (at < cert.valid_from_us || at >= cert.valid_to_us) {
                std::cout << "reject expired\n";
                return 5;
            }
            std::cout << "accept member=" << cert.member.hex() << "\n";
            return 0;
        }

        if (*ad_build) {
            Session s = Session::open(dir, "");
            std::map<std::string, TreeHandle> trees;
            for (const auto& p : adb_platforms) {
                auto eq = p.find('=');
                if (eq == std::string::npos)
                    fail(Err::bad_spec, "--platform needs tag=<root-hex>");
                trees[p.substr(0, eq)] = {BlockId::from_hex(p.substr(eq + 1))};
            }
            std::vector<BlockId> deps;
            for (const auto& d : adb_deps) deps.push_back(BlockId::from_hex(d));
            BlockId id = build_appdir(s.store, adb_name, trees, deps);
            std::cout << id.hex() << "\n";
            return 0;
        }

        if (*ad_closure) {
            Session s = Session::open(dir, "");
            for (const auto& id :
                 closure(s.store, BlockId::from_hex(adc_id), adc_platform))
                std::cout << id.hex() << "\n";
            return 0;
        }

        if (*ad_mat) {
            Session s = Session::open(dir, "");
            FsStore source = FsStore::open(adm_from);
            FetchLog log = materialize(s.store, BlockId::from_hex(adm_id),
                                       adm_platform, source);
            std::cout << "fetched_blocks=" << log.requested.size() << "\n"
                      << "bytes_fetched=" << log.bytes_fetched << "\n";
            return 0;
        }

        if (*sim_run) {
            netsim::Scenario sc =
                netsim::Scenario::parse_text(read_whole_file(dir / sim_file));
            netsim::SimNetwork net(sc);
            netsim::Metrics m =
                sim_baseline ? net.run_baseline(sim_seed) : net.run(sim_seed);
            std::cout << m.report();
            if (!sim_csv.empty()) write_whole_file(dir / sim_csv, m.csv());
            return 0;
        }

        if (*sc_render || *sc_events) {
            bool events = static_cast<bool>(*sc_events);
            std::string path = events ? sce_path : scr_path;
            Session s = Session::open(dir, events ? sce_root : scr_root);
            TreeHandle scene_root = s.root;
            if (!path.empty())
                scene_root = {resolve(s.store, s.root, path)};
            scene::RenderCache cache;
            if (events) {
                for (const auto& r : scene::event_map(s.store, scene_root, cache))
                    std::cout << r.x << "," << r.y << "," << r.w << "," << r.h
                              << " " << r.receptor_path << "\n";
            } else {
                auto result = scene::render(s.store, scene_root, cache);
                std::cout << scene::to_text(result.grid);
                std::cerr << "render_calls=" << result.render_calls << "\n";
            }
            return 0;
        }

        if (*sc_click) {
            Session s = Session::open(dir, click_root);
            VersionStamp stamp = pick_stamp(s.ws, click_stamp);
            if (!click_path.empty())
                fail(Err::bad_spec, "--path is not supported for click; "
                                    "click against the scene root");
            TreeHandle next = scene::deliver_event(s.store, s.root, click_x,
                                                   click_y, click_payload, stamp);
            s.commit_root(next);
            return 0;
        }

        std::cerr << "unknown command\n";
        return 2;
    } catch (const CaneError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
