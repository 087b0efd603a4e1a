#include "vix/persist.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>

using namespace vix;
using namespace vixtest;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

CommandResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    auto out_file = scratch / fmt::format("out_{}.txt", std::rand());
    std::string cmd = fmt::format("{} {} > {} 2>&1", VIX_CLI_PATH, args, out_file.string());
    int status = std::system(cmd.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = read_file(out_file);
    return result;
}

/// Writes the mock backends config + playbook used by the CLI tests: every
/// planner call finishes immediately with "B".
std::filesystem::path write_backends_config(const std::filesystem::path& dir) {
    nlohmann::json playbook{
        {"chat_rules",
         nlohmann::json::array(
             {{{"contains", "PREVIOUS STEPS:"},
               {"tool", "finish"},
               {"arguments", {{"answer", "B"}}}}})}};
    std::ofstream(dir / "playbook.json") << playbook.dump(2);
    nlohmann::json config{
        {"builder", {{"kind", "mock"}, {"playbook", "playbook.json"}}},
        {"reasoner", {{"kind", "mock"}, {"playbook", "playbook.json"}}},
        {"text_embedder", {{"kind", "mock"}, {"dim", 64}}},
        {"visual_embedder", {{"kind", "mock"}, {"dim", 48}}},
    };
    auto path = dir / "backends.json";
    std::ofstream(path) << config.dump(2);
    return path;
}

std::filesystem::path write_manifest(const std::filesystem::path& dir,
                                     const SourceManifest& manifest) {
    nlohmann::json j{{"video_id", manifest.video_id},
                     {"duration_s", manifest.duration_s},
                     {"transcript", manifest.transcript_path},
                     {"frames_dir", manifest.frames_dir},
                     {"language", manifest.language_tag},
                     {"segment_len_s", manifest.segment_len_s},
                     {"frames_per_segment", manifest.frames_per_segment}};
    auto path = dir / "manifest.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

} // namespace

TEST_CASE("cli builds, validates, asks, and evaluates end to end") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    auto manifest_path = write_manifest(dir.path(), manifest);
    auto backends_path = write_backends_config(dir.path());
    auto bundle = dir.path() / "bundle";

    auto build = run_cli(fmt::format("build --manifest {} --backends {} --out {}",
                                     manifest_path.string(), backends_path.string(),
                                     bundle.string()),
                         dir.path());
    CHECK(build.exit_code == 0);
    CHECK(build.output.find("6 segments") != std::string::npos);
    CHECK(std::filesystem::exists(bundle / "header.json"));
    CHECK(std::filesystem::exists(bundle / "build_report.jsonl"));

    auto validate = run_cli(fmt::format("validate --index {}", bundle.string()), dir.path());
    CHECK(validate.exit_code == 0);
    CHECK(validate.output.find("ok:") != std::string::npos);

    auto trace_path = dir.path() / "ask.trace.jsonl";
    auto ask = run_cli(fmt::format("ask --index {} --backends {} --question \"who speaks?\" "
                                   "--trace {}",
                                   bundle.string(), backends_path.string(), trace_path.string()),
                       dir.path());
    CHECK(ask.exit_code == 0);
    CHECK(ask.output.find("B") != std::string::npos);
    CHECK(std::filesystem::exists(trace_path));

    auto dump = run_cli(fmt::format("dump-trace --trace {}", trace_path.string()), dir.path());
    CHECK(dump.exit_code == 0);
    CHECK(dump.output.find("termination: finished") != std::string::npos);
    CHECK(dump.output.find("final answer: B") != std::string::npos);

    std::ofstream qa(dir.path() / "qa.jsonl");
    qa << R"({"id": "q1", "video": "fixture", "question": "first?", "options": {"A": "x", "B": "y"}, "answer": "B", "category": "ER"})"
       << '\n';
    qa << R"({"id": "q2", "video": "fixture", "question": "second?", "options": {"A": "x", "B": "y"}, "answer": "A", "category": "TG"})"
       << '\n';
    qa.close();
    auto eval = run_cli(fmt::format("eval --qa {} --index {} --backends {} --out {}",
                                    (dir.path() / "qa.jsonl").string(), bundle.string(),
                                    backends_path.string(), (dir.path() / "report").string()),
                        dir.path());
    CHECK(eval.exit_code == 0);
    CHECK(std::filesystem::exists(dir.path() / "report" / "report.json"));
    CHECK(std::filesystem::exists(dir.path() / "report" / "traces" / "item_0000.trace.jsonl"));
    auto report = nlohmann::json::parse(read_file(dir.path() / "report" / "report.json"));
    CHECK(report["overall"]["accuracy"] == doctest::Approx(0.5));
    CHECK(eval.output.find("Overall") != std::string::npos);
}

TEST_CASE("cli exit codes distinguish input, backend, and bundle failures") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    auto backends_path = write_backends_config(dir.path());

    // Missing transcript file: input error -> 2.
    SourceManifest broken = manifest;
    broken.transcript_path = (dir.path() / "does_not_exist.jsonl").string();
    auto manifest_path = write_manifest(dir.path(), broken);
    auto build = run_cli(fmt::format("build --manifest {} --backends {} --out {}",
                                     manifest_path.string(), backends_path.string(),
                                     (dir.path() / "b1").string()),
                         dir.path());
    CHECK(build.exit_code == 2);

    // Corrupt bundle: 4.
    auto good_manifest = write_manifest(dir.path(), manifest);
    auto bundle = dir.path() / "bundle";
    auto ok = run_cli(fmt::format("build --manifest {} --backends {} --out {}",
                                  good_manifest.string(), backends_path.string(), bundle.string()),
                      dir.path());
    REQUIRE(ok.exit_code == 0);
    std::filesystem::resize_file(bundle / "vectors.bin",
                                 std::filesystem::file_size(bundle / "vectors.bin") - 4);
    auto ask = run_cli(fmt::format("ask --index {} --backends {} --question q", bundle.string(),
                                   backends_path.string()),
                       dir.path());
    CHECK(ask.exit_code == 4);

    // Unknown subcommand or missing flags: CLI parse error.
    auto bad = run_cli("frobnicate", dir.path());
    CHECK(bad.exit_code != 0);
}

TEST_CASE("cli rebuilds are byte-identical") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    auto manifest_path = write_manifest(dir.path(), manifest);
    auto backends_path = write_backends_config(dir.path());
    auto a = dir.path() / "a";
    auto b = dir.path() / "b";
    auto first = run_cli(fmt::format("build --manifest {} --backends {} --out {}",
                                     manifest_path.string(), backends_path.string(), a.string()),
                         dir.path());
    auto second = run_cli(fmt::format("build --manifest {} --backends {} --out {}",
                                      manifest_path.string(), backends_path.string(), b.string()),
                          dir.path());
    REQUIRE(first.exit_code == 0);
    REQUIRE(second.exit_code == 0);
    CHECK(same_dir_bytes(a, b));
}
