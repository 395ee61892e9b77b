#include "cane/store.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cane {

namespace fs = std::filesystem;

std::vector<BlockId> BlockStore::chunk_and_store(std::string_view bytes,
                                                 std::size_t chunk_size) {
    if (chunk_size == 0) fail(Err::oversized, "chunk size must be positive");
    std::vector<BlockId> ids;
    for (std::size_t off = 0; off < bytes.size(); off += chunk_size)
        ids.push_back(put_block(bytes.substr(off, chunk_size)));
    return ids;
}

// ---- MemStore ----

BlockId MemStore::put_block(std::string_view bytes, BlockClass cls) {
    // Manifest-class blocks are internally generated and may exceed the data
    // chunk size (large directories, long chunk lists).
    if (cls == BlockClass::data && bytes.size() > chunk_size_)
        fail(Err::oversized, "block exceeds chunk size");
    BlockId id = hash_bytes(bytes);
    std::lock_guard lock(mu_);
    stats_.logical_bytes += bytes.size();
    auto [it, inserted] = blocks_.emplace(id, std::string(bytes));
    if (inserted) {
        stats_.unique_blocks++;
        stats_.physical_bytes += bytes.size();
        if (cls == BlockClass::data)
            stats_.data_blocks++;
        else
            stats_.manifest_blocks++;
    }
    return id;
}

std::string MemStore::get_block(const BlockId& id) {
    std::lock_guard lock(mu_);
    auto it = blocks_.find(id);
    if (it == blocks_.end()) fail(Err::not_found, "block not found: " + id.hex());
    if (hash_bytes(it->second) != id)
        fail(Err::corruption, "stored block fails digest check: " + id.hex());
    return it->second;
}

bool MemStore::contains(const BlockId& id) {
    std::lock_guard lock(mu_);
    return blocks_.count(id) != 0;
}

StoreStats MemStore::stats() {
    std::lock_guard lock(mu_);
    return stats_;
}

void MemStore::tamper(const BlockId& id, std::size_t byte_offset) {
    std::lock_guard lock(mu_);
    auto it = blocks_.find(id);
    if (it == blocks_.end()) fail(Err::not_found, "tamper: no such block");
    it->second[byte_offset % std::max<std::size_t>(it->second.size(), 1)] ^= 0x01;
}

// ---- FsStore ----

static void write_text_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) fail(Err::io, "cannot write " + p.string());
}

FsStore FsStore::create(const fs::path& root, std::size_t chunk_size) {
    std::error_code ec;
    fs::create_directories(root / "blocks", ec);
    if (ec) fail(Err::io, "cannot create store at " + root.string());
    std::ostringstream cfg;
    cfg << "hash_bits=" << kDigestBytes * 8 << "\n"
        << "chunk_size=" << chunk_size << "\n";
    write_text_file(root / "store.cfg", cfg.str());
    FsStore store(root, chunk_size);
    store.save_stats();
    return store;
}

FsStore FsStore::open(const fs::path& root) {
    std::ifstream cfg(root / "store.cfg");
    if (!cfg) fail(Err::not_found, "no store at " + root.string());
    std::size_t chunk_size = 4096;
    std::string line;
    while (std::getline(cfg, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto key = line.substr(0, eq);
        auto val = line.substr(eq + 1);
        if (key == "chunk_size") chunk_size = std::stoull(val);
        if (key == "hash_bits" && std::stoull(val) != kDigestBytes * 8)
            fail(Err::bad_spec, "unsupported hash width in store.cfg");
    }
    FsStore store(root, chunk_size);
    store.load_stats();
    return store;
}

fs::path FsStore::block_path(const BlockId& id) const {
    std::string hex = id.hex();
    return root_ / "blocks" / hex.substr(0, 2) / hex;
}

void FsStore::load_stats() {
    std::ifstream in(root_ / "stats.txt");
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto key = line.substr(0, eq);
        std::uint64_t val = std::stoull(line.substr(eq + 1));
        if (key == "unique_blocks") stats_.unique_blocks = val;
        else if (key == "logical_bytes") stats_.logical_bytes = val;
        else if (key == "physical_bytes") stats_.physical_bytes = val;
        else if (key == "data_blocks") stats_.data_blocks = val;
        else if (key == "manifest_blocks") stats_.manifest_blocks = val;
    }
}

void FsStore::save_stats() {
    std::ostringstream out;
    out << "unique_blocks=" << stats_.unique_blocks << "\n"
        << "logical_bytes=" << stats_.logical_bytes << "\n"
        << "physical_bytes=" << stats_.physical_bytes << "\n"
        << "data_blocks=" << stats_.data_blocks << "\n"
        << "manifest_blocks=" << stats_.manifest_blocks << "\n";
    write_text_file(root_ / "stats.txt", out.str());
}

BlockId FsStore::put_block(std::string_view bytes, BlockClass cls) {
    if (cls == BlockClass::data && bytes.size() > chunk_size_)
        fail(Err::oversized, "block exceeds chunk size");
    BlockId id = hash_bytes(bytes);
    std::lock_guard lock(mu_);
    stats_.logical_bytes += bytes.size();
    fs::path target = block_path(id);
    if (!fs::exists(target)) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        fs::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out) fail(Err::io, "cannot write block " + id.hex());
        }
        fs::rename(tmp, target, ec);
        if (ec) fail(Err::io, "cannot commit block " + id.hex());
        stats_.unique_blocks++;
        stats_.physical_bytes += bytes.size();
        if (cls == BlockClass::data)
            stats_.data_blocks++;
        else
            stats_.manifest_blocks++;
    }
    save_stats();
    return id;
}

std::string FsStore::get_block(const BlockId& id) {
    fs::path target = block_path(id);
    std::ifstream in(target, std::ios::binary);
    if (!in) fail(Err::not_found, "block not found: " + id.hex());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string bytes = buf.str();
    if (hash_bytes(bytes) != id)
        fail(Err::corruption, "stored block fails digest check: " + id.hex());
    return bytes;
}

bool FsStore::contains(const BlockId& id) {
    return fs::exists(block_path(id));
}

StoreStats FsStore::stats() {
    std::lock_guard lock(mu_);
    return stats_;
}

// ---- collision probability ----

double collision_probability(double n_items, double hash_bits) {
    if (n_items <= 1.0) return 0.0;
    if (hash_bits <= 20.0 && n_items <= static_cast<double>(1 << 20)) {
        double space = std::ldexp(1.0, static_cast<int>(hash_bits));
        if (n_items > space) return 1.0;  // pigeonhole
        double log_no_collision = 0.0;
        for (std::uint64_t i = 1; i < static_cast<std::uint64_t>(n_items); ++i)
            log_no_collision += std::log1p(-static_cast<double>(i) / space);
        return -std::expm1(log_no_collision);
    }
    // n(n-1)/2 * 2^-bits, via logs so 2^140-scale counts do not overflow.
    double lp = std::log(n_items) + std::log(n_items - 1.0) - std::log(2.0) -
                hash_bits * std::numbers::ln2;
    return std::min(std::exp(lp), 1.0);
}

}  // namespace cane
