#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cane/store.hpp"

using namespace cane;
namespace fs = std::filesystem;

namespace {

std::string random_bytes(std::mt19937& rng, std::size_t n) {
    std::string out(n, '\0');
    for (auto& c : out) c = static_cast<char>(rng() & 0xff);
    return out;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cane-test-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Independent oracle: direct product of survival probabilities.
double exact_collision(std::uint64_t n, unsigned bits) {
    long double space = std::ldexp(1.0L, static_cast<int>(bits));
    long double p_none = 1.0L;
    for (std::uint64_t i = 1; i < n; ++i) {
        long double factor = (space - static_cast<long double>(i)) / space;
        if (factor < 0) factor = 0;
        p_none *= factor;
    }
    return static_cast<double>(1.0L - p_none);
}

}  // namespace

TEST_CASE("put is idempotent, including on the empty block") {
    MemStore store;
    BlockId d0 = store.put_block("");
    CHECK(store.stats().unique_blocks == 1);
    CHECK(store.put_block("") == d0);
    CHECK(store.stats().unique_blocks == 1);
}

TEST_CASE("identical zero blocks are stored once") {
    MemStore store;
    std::string zeros(4096, '\0');
    BlockId a = store.put_block(zeros);
    BlockId b = store.put_block(zeros);
    CHECK(a == b);
    CHECK(store.stats().unique_blocks == 1);
}

TEST_CASE("a single flipped bit yields a different id") {
    MemStore store;
    std::string b1(100, 'x');
    std::string b2 = b1;
    b2[50] = static_cast<char>(b2[50] ^ 0x01);
    CHECK(store.put_block(b1) != store.put_block(b2));
}

TEST_CASE("get roundtrips and unknown ids are not-found") {
    MemStore store;
    std::string bytes = "hello content addressing";
    CHECK(store.get_block(store.put_block(bytes)) == bytes);
    BlockId unknown;
    unknown.digest.fill(0xab);
    CHECK_THROWS_WITH_AS(store.get_block(unknown), doctest::Contains("not found"),
                         CaneError);
}

TEST_CASE("oversized put is rejected") {
    MemStore store(16);
    CHECK_THROWS_AS(store.put_block(std::string(17, 'a')), CaneError);
}

TEST_CASE("tampered storage reads as corruption, never as data") {
    SUBCASE("in memory") {
        MemStore store;
        BlockId id = store.put_block("important bytes");
        store.tamper(id, 3);
        try {
            store.get_block(id);
            FAIL("corruption not detected");
        } catch (const CaneError& e) {
            CHECK(e.kind() == Err::corruption);
        }
    }
    SUBCASE("on disk") {
        TempDir dir;
        FsStore store = FsStore::create(dir.path / "store");
        BlockId id = store.put_block("important bytes");
        // Flip one byte of the stored block file directly.
        fs::path file =
            dir.path / "store" / "blocks" / id.hex().substr(0, 2) / id.hex();
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        char c;
        f.read(&c, 1);
        f.seekp(0);
        c = static_cast<char>(c ^ 0x40);
        f.write(&c, 1);
        f.close();
        try {
            store.get_block(id);
            FAIL("corruption not detected");
        } catch (const CaneError& e) {
            CHECK(e.kind() == Err::corruption);
        }
    }
}

TEST_CASE("chunking: a MiB of zeros needs one data block") {
    MemStore store;
    std::string zeros(1 << 20, '\0');
    auto ids = store.chunk_and_store(zeros, 4096);
    CHECK(ids.size() == 256);
    for (const auto& id : ids) CHECK(id == ids[0]);
    StoreStats st = store.stats();
    CHECK(st.data_blocks == 1);
    CHECK(st.logical_bytes == (1 << 20));
    CHECK(st.physical_bytes == 4096);
}

TEST_CASE("chunking edge cases and reassembly") {
    MemStore store;
    CHECK(store.chunk_and_store("", 4096).empty());

    std::mt19937 rng(7);
    std::string bytes = random_bytes(rng, 10000);
    auto ids = store.chunk_and_store(bytes, 4096);
    REQUIRE(ids.size() == 3);
    std::string back;
    for (const auto& id : ids) back += store.get_block(id);
    CHECK(back.size() == 10000);
    CHECK(back == bytes);
    CHECK(store.get_block(ids[2]).size() == 1808);
}

TEST_CASE("roundtrip property over random byte strings") {
    std::mt19937 rng(42);
    MemStore store(64);
    for (int round = 0; round < 50; ++round) {
        std::string bytes = random_bytes(rng, rng() % 1000);
        std::string back;
        for (const auto& id : store.chunk_and_store(bytes))
            back += store.get_block(id);
        CHECK(back == bytes);
    }
}

TEST_CASE("repeating a put sequence leaves physical state unchanged") {
    std::mt19937 rng(43);
    MemStore store;
    std::vector<std::string> blobs;
    for (int i = 0; i < 20; ++i) blobs.push_back(random_bytes(rng, rng() % 4096));
    for (const auto& b : blobs) store.put_block(b);
    StoreStats before = store.stats();
    for (const auto& b : blobs) store.put_block(b);
    StoreStats after = store.stats();
    CHECK(after.unique_blocks == before.unique_blocks);
    CHECK(after.physical_bytes == before.physical_bytes);
    CHECK(after.physical_bytes <= after.logical_bytes);
    CHECK(after.unique_blocks == after.data_blocks + after.manifest_blocks);
}

TEST_CASE("fs store persists blocks and counters across opens") {
    TempDir dir;
    BlockId id;
    {
        FsStore store = FsStore::create(dir.path / "store", 4096);
        id = store.put_block("persistent");
        CHECK(store.stats().unique_blocks == 1);
    }
    {
        FsStore store = FsStore::open(dir.path / "store");
        CHECK(store.chunk_size() == 4096);
        CHECK(store.get_block(id) == "persistent");
        CHECK(store.stats().unique_blocks == 1);
        CHECK(store.stats().data_blocks == 1);
    }
}

TEST_CASE("collision probability: headline figure and trivial cases") {
    CHECK(collision_probability(std::ldexp(1.0, 140), 512) < 1e-70);
    CHECK(collision_probability(std::ldexp(1.0, 140), 512) > 0.0);
    CHECK(collision_probability(1, 512) == 0.0);
    CHECK(collision_probability(0, 512) == 0.0);
}

TEST_CASE("collision probability matches the exact oracle") {
    CHECK(collision_probability(3, 4) == doctest::Approx(0.1796875).epsilon(1e-12));
    CHECK(exact_collision(3, 4) == doctest::Approx(0.1796875).epsilon(1e-12));

    for (unsigned bits = 1; bits <= 20; bits += 3) {
        for (std::uint64_t n : {0ull, 1ull, 2ull, 3ull, 10ull, 100ull, 1024ull}) {
            double expect = n <= 1 ? 0.0 : exact_collision(n, bits);
            double got = collision_probability(static_cast<double>(n), bits);
            if (expect == 0.0)
                CHECK(got == 0.0);
            else
                CHECK(std::abs(got - expect) / expect < 0.1);
        }
    }
}
