#include "vix/build.hpp"
#include "vix/errors.hpp"
#include "vix/persist.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace vix;
using namespace vixtest;

TEST_CASE("bundle round trip is lossless including vectors") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildReport report;
    IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);

    auto bundle = dir.path() / "bundle";
    save_index(db, bundle);
    IndexDatabase loaded = load_index(bundle);
    CHECK(loaded == db);
    CHECK(validate_database(loaded).ok());

    // Vectors reload bit-exact.
    REQUIRE(loaded.store.records().size() == db.store.records().size());
    for (std::size_t i = 0; i < db.store.records().size(); ++i)
        CHECK(loaded.store.records()[i].vector == db.store.records()[i].vector);
}

TEST_CASE("randomized databases survive the round trip") {
    std::mt19937 rng(67);
    for (int iter = 0; iter < 5; ++iter) {
        TempDir dir;
        SourceManifest manifest = write_corpus(dir.path(), random_corpus_spec(rng));
        BackendSet backends = mock_backends();
        BuildReport report;
        IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);
        auto bundle = dir.path() / "bundle";
        save_index(db, bundle);
        CHECK(load_index(bundle) == db);
    }
}

TEST_CASE("a truncated vector file is rejected by checksum") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildReport report;
    IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);
    auto bundle = dir.path() / "bundle";
    save_index(db, bundle);

    auto vectors = bundle / "vectors.bin";
    auto size = std::filesystem::file_size(vectors);
    std::filesystem::resize_file(vectors, size - 8);
    CHECK_THROWS_AS(load_index(bundle), CorruptBundle);
}

TEST_CASE("a tampered byte is rejected by checksum") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildReport report;
    IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);
    auto bundle = dir.path() / "bundle";
    save_index(db, bundle);

    auto segments_file = bundle / "segments.jsonl";
    std::fstream f(segments_file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    f.put('#');
    f.close();
    CHECK_THROWS_AS(load_index(bundle), CorruptBundle);
}

TEST_CASE("future format versions are refused") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildReport report;
    IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);
    auto bundle = dir.path() / "bundle";
    save_index(db, bundle);

    std::string header = read_file(bundle / "header.json");
    auto pos = header.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    header.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 99");
    std::ofstream(bundle / "header.json", std::ios::binary) << header;
    CHECK_THROWS_AS(load_index(bundle), VersionMismatch);
}

TEST_CASE("missing files and non-bundles are corrupt") {
    TempDir dir;
    CHECK_THROWS_AS(load_index(dir.path()), CorruptBundle);

    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildReport report;
    IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);
    auto bundle = dir.path() / "bundle";
    save_index(db, bundle);
    std::filesystem::remove(bundle / "scenes.jsonl");
    CHECK_THROWS_AS(load_index(bundle), CorruptBundle);
}

TEST_CASE("saving twice produces byte-identical bundles") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildReport report;
    IndexDatabase db = build_index(manifest, BuildConfig{}, backends, report);
    auto a = dir.path() / "a";
    auto b = dir.path() / "b";
    save_index(db, a);
    save_index(db, b);
    CHECK(same_dir_bytes(a, b));
}
