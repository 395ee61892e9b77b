#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "cane/types.hpp"

namespace cane {

enum class BlockClass : std::uint8_t { data = 0, manifest = 1 };

struct StoreStats {
    std::uint64_t unique_blocks = 0;
    std::uint64_t logical_bytes = 0;
    std::uint64_t physical_bytes = 0;
    std::uint64_t data_blocks = 0;
    std::uint64_t manifest_blocks = 0;
};

// Immutable, deduplicating, digest-verified block store.
class BlockStore {
public:
    virtual ~BlockStore() = default;

    // Idempotent; verifies size against the configured chunk size.
    virtual BlockId put_block(std::string_view bytes,
                              BlockClass cls = BlockClass::data) = 0;
    // Returned bytes always hash to id; tampered storage raises corruption,
    // never silently returns bad data.
    virtual std::string get_block(const BlockId& id) = 0;
    virtual bool contains(const BlockId& id) = 0;
    virtual StoreStats stats() = 0;
    virtual std::size_t chunk_size() const = 0;

    std::vector<BlockId> chunk_and_store(std::string_view bytes,
                                         std::size_t chunk_size);
    std::vector<BlockId> chunk_and_store(std::string_view bytes) {
        return chunk_and_store(bytes, chunk_size());
    }
};

class MemStore final : public BlockStore {
public:
    explicit MemStore(std::size_t chunk_size = 4096) : chunk_size_(chunk_size) {}

    BlockId put_block(std::string_view bytes,
                      BlockClass cls = BlockClass::data) override;
    std::string get_block(const BlockId& id) override;
    bool contains(const BlockId& id) override;
    StoreStats stats() override;
    std::size_t chunk_size() const override { return chunk_size_; }

    // Test hook: flip stored bytes without going through put.
    void tamper(const BlockId& id, std::size_t byte_offset);

private:
    std::size_t chunk_size_;
    mutable std::mutex mu_;
    std::map<BlockId, std::string> blocks_;
    StoreStats stats_{};
};

// One file per block under blocks/<hex[0:2]>/<full-hex>; store.cfg holds
// hash_bits and chunk_size. Writes are temp-then-rename so racing identical
// puts converge.
class FsStore final : public BlockStore {
public:
    static FsStore create(const std::filesystem::path& root,
                          std::size_t chunk_size = 4096);
    static FsStore open(const std::filesystem::path& root);

    BlockId put_block(std::string_view bytes,
                      BlockClass cls = BlockClass::data) override;
    std::string get_block(const BlockId& id) override;
    bool contains(const BlockId& id) override;
    StoreStats stats() override;
    std::size_t chunk_size() const override { return chunk_size_; }

    const std::filesystem::path& root() const { return root_; }

    FsStore(FsStore&& other) noexcept
        : root_(std::move(other.root_)),
          chunk_size_(other.chunk_size_),
          stats_(other.stats_) {}

private:
    FsStore(std::filesystem::path root, std::size_t chunk_size)
        : root_(std::move(root)), chunk_size_(chunk_size) {}

    std::filesystem::path block_path(const BlockId& id) const;
    void load_stats();
    void save_stats();

    std::filesystem::path root_;
    std::size_t chunk_size_;
    mutable std::mutex mu_;
    StoreStats stats_{};
};

// Birthday-bound collision probability for n items under a hash of the given
// width, evaluated in log space. Small spaces (<= 2^20 outcomes) use the
// exact product instead of the quadratic approximation.
double collision_probability(double n_items, double hash_bits);

}  // namespace cane
