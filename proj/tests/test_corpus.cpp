#include <cstring>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "xmf/corpus.hpp"

using namespace xmf;
using namespace xmf::test;

namespace {

// Minimal independent XMEB writer so ingest is not tested against write_xmeb.
std::string raw_xmeb(uint8_t source, uint8_t modality, uint64_t count, uint32_t dim,
                     const std::vector<std::string>& ids, const std::vector<float>& payload,
                     uint16_t version = 1, const char* magic = "XMEB") {
    std::string out(magic, 4);
    auto le = [&out](auto value, std::size_t bytes) {
        for (std::size_t i = 0; i < bytes; ++i) {
            out.push_back(char((uint64_t(value) >> (8 * i)) & 0xff));
        }
    };
    le(version, 2);
    le(source, 1);
    le(modality, 1);
    le(count, 8);
    le(dim, 4);
    for (const auto& id : ids) {
        le(uint16_t(id.size()), 2);
        out += id;
    }
    for (float f : payload) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        le(bits, 4);
    }
    return out;
}

}  // namespace

TEST_CASE("ingest echoes header of a valid 3x4 file") {
    TempDir dir;
    std::vector<float> payload(12);
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = float(i) * 0.5f;
    write_file(dir.file("a.xmeb"), raw_xmeb(1, 0, 3, 4, {"x", "y", "z"}, payload));
    EmbeddingSet set = ingest(dir.file("a.xmeb"));
    CHECK(set.count() == 3);
    CHECK(set.dim() == 4);
    CHECK(set.source() == Source::audio);
    CHECK(set.modality() == Modality::raw);
    CHECK(set.row(1)[2] == 3.0);
    CHECK(set.index_of("z") == 2);
    CHECK(set.index_of("missing") == EmbeddingSet::npos);
}

TEST_CASE("ingest rejects the documented malformations with declared codes") {
    TempDir dir;
    std::vector<float> ok(4, 1.0f);
    auto expect_code = [&](const std::string& bytes, ErrorCode code) {
        write_file(dir.file("bad.xmeb"), bytes);
        try {
            ingest(dir.file("bad.xmeb"));
            FAIL("expected error");
        } catch (const XmfError& e) {
            CHECK(e.code() == code);
        }
    };
    // 1. wrong magic
    expect_code(raw_xmeb(0, 0, 2, 2, {"a", "b"}, ok, 1, "XMEX"), ErrorCode::malformed_header);
    // 2. unsupported version
    expect_code(raw_xmeb(0, 0, 2, 2, {"a", "b"}, ok, 9), ErrorCode::malformed_header);
    // 3. invalid source tag
    expect_code(raw_xmeb(7, 0, 2, 2, {"a", "b"}, ok), ErrorCode::malformed_header);
    // 4. payload shorter than count*dim
    expect_code(raw_xmeb(0, 0, 2, 2, {"a", "b"}, {1.0f, 2.0f}), ErrorCode::dimension_mismatch);
    // 5. duplicate id
    expect_code(raw_xmeb(0, 0, 2, 2, {"a", "a"}, ok), ErrorCode::duplicate_id);
    // 6. NaN payload entry
    expect_code(raw_xmeb(0, 0, 2, 2, {"a", "b"},
                         {1.0f, std::numeric_limits<float>::quiet_NaN(), 1.0f, 1.0f}),
                ErrorCode::non_finite_value);
}

TEST_CASE("declared count of 2 with a single row is a dimension mismatch") {
    TempDir dir;
    write_file(dir.file("short.xmeb"), raw_xmeb(0, 0, 2, 2, {"a", "b"}, {1.0f, 2.0f}));
    CHECK_THROWS_WITH_AS(ingest(dir.file("short.xmeb")),
                         doctest::Contains("record 1"), XmfError);
}

TEST_CASE("trailing bytes after the payload are rejected") {
    TempDir dir;
    std::string bytes = raw_xmeb(0, 0, 1, 2, {"a"}, {1.0f, 2.0f});
    bytes += "junk";
    write_file(dir.file("long.xmeb"), bytes);
    CHECK_THROWS_AS(ingest(dir.file("long.xmeb")), XmfError);
}

TEST_CASE("write(ingest(f)) round-trips byte-identically over fuzzed files") {
    TempDir dir;
    std::mt19937_64 rng(20260826);
    std::uniform_int_distribution<std::size_t> count_dist(1, 12);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 9);
    std::uniform_real_distribution<float> value(-10.0f, 10.0f);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t count = count_dist(rng);
        std::size_t dim = dim_dist(rng);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < count; ++i) {
            ids.push_back("id_" + std::to_string(trial) + "_" + std::to_string(i) +
                          std::string(i % 3, 'x'));
        }
        std::vector<float> payload(count * dim);
        for (auto& f : payload) f = value(rng);
        std::string original = raw_xmeb(uint8_t(rng() % 2), uint8_t(rng() % 2),
                                        count, uint32_t(dim), ids, payload);
        write_file(dir.file("f.xmeb"), original);
        write_xmeb(ingest(dir.file("f.xmeb")), dir.file("g.xmeb"));
        REQUIRE(read_file(dir.file("g.xmeb")) == original);
    }
}

TEST_CASE("normalize") {
    SUBCASE("3-4-5 row") {
        auto set = normalize(make_set({"a"}, {{3.0, 4.0}}));
        CHECK(set.row(0)[0] == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(set.row(0)[1] == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(set.normalized());
    }
    SUBCASE("unit row is untouched") {
        auto set = normalize(make_set({"a"}, {{1.0, 0.0}}));
        CHECK(set.row(0)[0] == 1.0);
        CHECK(set.row(0)[1] == 0.0);
    }
    SUBCASE("idempotent, bit for bit") {
        std::mt19937_64 rng(7);
        auto set = random_set(20, 6, rng);
        auto once = normalize(set);
        auto twice = normalize(once);
        CHECK(once.data() == twice.data());
    }
    SUBCASE("zero row rejected") {
        CHECK_THROWS_WITH_AS(normalize(make_set({"a", "b"}, {{1.0, 0.0}, {0.0, 0.0}})),
                             doctest::Contains("row 1"), XmfError);
    }
}

TEST_CASE("load_metadata") {
    TempDir dir;
    SUBCASE("parses style and ignores unknown fields") {
        write_file(dir.file("m.jsonl"),
                   "{\"id\":\"w1\",\"style\":\"Expressionism\",\"extra\":1}\n"
                   "{\"id\":\"t1\",\"genre\":\"Metal\"}\n");
        auto meta = load_metadata(dir.file("m.jsonl"));
        REQUIRE(meta.size() == 2);
        CHECK(meta[0].id == "w1");
        CHECK(meta[0].style == "Expressionism");
        CHECK_FALSE(meta[0].genre.has_value());
        CHECK(meta[1].genre == "Metal");
    }
    SUBCASE("missing id") {
        write_file(dir.file("m.jsonl"), "{\"style\":\"Cubism\"}\n");
        try {
            load_metadata(dir.file("m.jsonl"));
            FAIL("expected error");
        } catch (const XmfError& e) {
            CHECK(e.code() == ErrorCode::missing_id);
        }
    }
    SUBCASE("parse error names the line") {
        write_file(dir.file("m.jsonl"), "{\"id\":\"a\"}\nnot json\n");
        CHECK_THROWS_WITH_AS(load_metadata(dir.file("m.jsonl")), doctest::Contains("line 2"),
                             XmfError);
    }
    SUBCASE("empty file gives empty list") {
        write_file(dir.file("m.jsonl"), "");
        CHECK(load_metadata(dir.file("m.jsonl")).empty());
    }
}

// O(N*d) memory: ingest of 1e5 x 1024 float32 rows (~410 MB on disk,
// ~820 MB as doubles) must not balloon beyond payload + id table + slack.
namespace alloc_probe {
std::atomic<std::size_t> live{0};
std::atomic<std::size_t> peak{0};
std::atomic<bool> armed{false};
}  // namespace alloc_probe

void* operator new(std::size_t size) {
    void* p = std::malloc(size + 16);
    if (!p) throw std::bad_alloc();
    *static_cast<std::size_t*>(p) = size;
    if (alloc_probe::armed) {
        auto now = alloc_probe::live.fetch_add(size) + size;
        std::size_t prev = alloc_probe::peak.load();
        while (now > prev && !alloc_probe::peak.compare_exchange_weak(prev, now)) {
        }
    }
    return static_cast<char*>(p) + 16;
}

void operator delete(void* p) noexcept {
    if (!p) return;
    char* base = static_cast<char*>(p) - 16;
    if (alloc_probe::armed) {
        alloc_probe::live.fetch_sub(*reinterpret_cast<std::size_t*>(base));
    }
    std::free(base);
}

void operator delete(void* p, std::size_t) noexcept { operator delete(p); }

TEST_CASE("ingest memory stays O(N*d)") {
    const std::size_t n = 100000, d = 1024;
    TempDir dir;
    {
        std::vector<std::string> ids;
        std::vector<double> flat(n * d, 0.25);
        ids.reserve(n);
        for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
        write_xmeb(EmbeddingSet(std::move(ids), d, std::move(flat), Source::image, Modality::raw),
                   dir.file("big.xmeb"));
    }
    alloc_probe::live = 0;
    alloc_probe::peak = 0;
    alloc_probe::armed = true;
    {
        EmbeddingSet set = ingest(dir.file("big.xmeb"));
        CHECK(set.count() == n);
    }
    alloc_probe::armed = false;
    const std::size_t payload = n * d * sizeof(double);
    // payload + id strings/hash map + a fixed allowance, nothing quadratic
    CHECK(alloc_probe::peak.load() < payload + n * 128 + (16u << 20));
}
