#include "vix/agent.hpp"
#include "vix/build.hpp"
#include "vix/config.hpp"
#include "vix/errors.hpp"
#include "vix/eval.hpp"
#include "vix/persist.hpp"
#include "vix/report.hpp"
#include "vix/tools.hpp"

#include <CLI11.hpp>

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>

namespace {

using namespace vix;

struct BackendFlags {
    std::string config_path;
    std::string builder_url;
    std::string builder_model;
    std::string reasoner_url;
    std::string reasoner_model;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--backends", config_path, "Backends config JSON (defaults to all-mock)");
        cmd.add_option("--builder-url", builder_url, "Override the builder base URL");
        cmd.add_option("--builder-model", builder_model, "Override the builder model name");
        cmd.add_option("--reasoner-url", reasoner_url, "Override the reasoner base URL");
        cmd.add_option("--reasoner-model", reasoner_model, "Override the reasoner model name");
    }

    BackendSet make() const {
        BackendsConfig cfg = config_path.empty() ? BackendsConfig::mock_defaults()
                                                 : BackendsConfig::from_file(config_path);
        cfg.apply_env();
        // CLI flags outrank both the file and the environment.
        auto apply = [](BackendSpec& spec, const std::string& url, const std::string& model) {
            if (!url.empty()) {
                spec.base_url = url;
                spec.kind = "http";
            }
            if (!model.empty())
                spec.model = model;
        };
        apply(cfg.builder, builder_url, builder_model);
        apply(cfg.captioner, builder_url, builder_model);
        apply(cfg.reasoner, reasoner_url, reasoner_model);
        apply(cfg.inspector, reasoner_url, reasoner_model);
        return make_backends(cfg);
    }
};

struct ToolFlags {
    std::optional<int> k;
    std::optional<int> k1;
    std::optional<int> k2;
    std::optional<int> max_steps;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--k", k, "Hits per segment search");
        cmd.add_option("--k1", k1, "Stage-1 entity candidates");
        cmd.add_option("--k2", k2, "Stage-2 reranked segments");
        cmd.add_option("--max-steps", max_steps, "Agent reasoning depth");
    }

    ToolConfig tool_config(const BuildConfig& base) const {
        ToolConfig cfg = ToolConfig::from_build_config(base);
        if (k) cfg.search_k = *k;
        if (k1) cfg.entity_top_k1 = *k1;
        if (k2) cfg.entity_top_k2 = *k2;
        return cfg;
    }

    AgentOptions agent_options(const BuildConfig& base) const {
        AgentOptions opts = AgentOptions::from_build_config(base);
        if (max_steps)
            opts.max_steps = static_cast<std::size_t>(*max_steps);
        return opts;
    }
};

int cmd_build(const std::string& manifest_path, const BackendFlags& backend_flags,
              const std::string& out_dir, BuildConfig config,
              std::optional<double> segment_len, std::optional<int> frames_per_segment) {
    SourceManifest manifest = load_manifest(manifest_path);
    if (segment_len)
        manifest.segment_len_s = *segment_len;
    if (frames_per_segment)
        manifest.frames_per_segment = *frames_per_segment;

    BackendSet backends = backend_flags.make();
    BuildReport report;
    IndexDatabase db = build_index(manifest, config, backends, report);

    ValidationReport validation = validate_database(db);
    if (!validation.ok()) {
        for (const std::string& v : validation.violations)
            std::cerr << "violation: " << v << '\n';
        std::cerr << "built index failed validation\n";
        return 1;
    }

    save_index(db, out_dir);
    report.write_jsonl(std::filesystem::path(out_dir) / "build_report.jsonl");
    fmt::print("indexed {}: {} segments, {} entities, {} scenes, {} vector records\n",
               manifest.video_id, db.segments.size(), db.entities.size(), db.scenes.size(),
               db.store.size());
    fmt::print("bundle written to {}\n", out_dir);
    return 0;
}

int cmd_ask(const std::string& index_dir, const BackendFlags& backend_flags,
            const std::string& question, const std::string& trace_path,
            const ToolFlags& tool_flags) {
    IndexDatabase db = load_index(index_dir);
    BackendSet backends = backend_flags.make();
    Toolbox toolbox(db, backends, tool_flags.tool_config(db.config));
    AgentRunner runner(toolbox, backends.reasoner, tool_flags.agent_options(db.config));
    AgentTrace trace = runner.run(question);

    if (!trace_path.empty())
        write_trace(trace, trace_path);
    if (trace.termination == Termination::backend_error) {
        std::cerr << "agent terminated on a backend error\n";
        return 3;
    }
    if (trace.termination == Termination::budget_exhausted)
        std::cerr << fmt::format("step budget exhausted after {} steps; best-effort answer\n",
                                 trace.steps.size());
    fmt::print("{}\n", trace.final_answer);
    return 0;
}

int cmd_eval(const std::string& qa_path, const std::string& index_dir,
             const std::string& index_root, const BackendFlags& backend_flags,
             const std::string& out_dir, int workers, const ToolFlags& tool_flags) {
    std::vector<QAItem> items = load_qa_file(qa_path);
    BackendSet backends = backend_flags.make();

    std::map<std::string, IndexDatabase> cache;
    std::mutex cache_mu;
    IndexProvider provider = [&](const std::string& video_id) -> const IndexDatabase& {
        std::scoped_lock lock(cache_mu);
        auto it = cache.find(video_id);
        if (it != cache.end())
            return it->second;
        std::filesystem::path bundle = index_root.empty()
                                           ? std::filesystem::path(index_dir)
                                           : std::filesystem::path(index_root) / video_id;
        return cache.emplace(video_id, load_index(bundle)).first->second;
    };

    EvalOptions options;
    options.workers = workers;
    std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    options.trace_dir = out / "traces";
    if (!items.empty()) {
        // Uniform overrides when flags are given; otherwise each bundle's own
        // config applies.
        if (tool_flags.k || tool_flags.k1 || tool_flags.k2)
            options.tools = tool_flags.tool_config(provider(items.front().video_id).config);
        if (tool_flags.max_steps)
            options.agent = tool_flags.agent_options(provider(items.front().video_id).config);
    }

    EvalReport report = run_eval(items, provider, backends, options);

    std::ofstream json_out(out / "report.json", std::ios::binary);
    json_out << report.to_json().dump(2) << '\n';
    std::string table = render_report_table(report);
    std::ofstream table_out(out / "report.txt", std::ios::binary);
    table_out << table;
    fmt::print("{}", table);
    fmt::print("report written to {}\n", out.string());
    return 0;
}

int cmd_validate(const std::string& index_dir) {
    IndexDatabase db = load_index(index_dir);
    ValidationReport report = validate_database(db);
    if (report.ok()) {
        fmt::print("ok: {} segments, {} entities, {} scenes\n", db.segments.size(),
                   db.entities.size(), db.scenes.size());
        return 0;
    }
    for (const std::string& v : report.violations)
        fmt::print("violation: {}\n", v);
    return 2;
}

int cmd_dump_trace(const std::string& trace_path) {
    AgentTrace trace = read_trace(trace_path);
    fmt::print("{}", render_trace(trace));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical long-video index builder and agentic question answering"};
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build", "Build an index bundle from a source manifest");
    std::string manifest_path;
    std::string out_dir;
    BackendFlags build_backends;
    BuildConfig build_config;
    std::optional<double> segment_len;
    std::optional<int> frames_per_segment;
    build->add_option("--manifest", manifest_path, "Source manifest JSON")->required();
    build->add_option("--out", out_dir, "Output bundle directory")->required();
    build_backends.add_to(*build);
    build->add_option("--segment-len", segment_len, "Segment length in seconds");
    build->add_option("--frames-per-segment", frames_per_segment, "Frames sampled per segment");
    build->add_option("--cluster-threshold", build_config.cluster_threshold,
                      "Entity clustering cosine threshold");
    build->add_option("--k1", build_config.entity_top_k1, "Stage-1 entity candidates");
    build->add_option("--k2", build_config.entity_top_k2, "Stage-2 reranked segments");
    build->add_option("--k", build_config.search_k, "Hits per segment search");
    build->add_option("--chunk-size", build_config.chunk_size, "Segments per scene chunk");
    build->add_option("--chunk-overlap", build_config.chunk_overlap, "Scene chunk overlap");
    build->add_option("--max-steps", build_config.max_steps, "Agent reasoning depth");
    build->add_option("--max-frames", build_config.max_frames, "Visual inspection frame cap");
    build->add_option("--workers", build_config.workers, "Build worker threads");

    auto* ask = app.add_subcommand("ask", "Answer one question over a built index");
    std::string ask_index;
    std::string question;
    std::string trace_path;
    BackendFlags ask_backends;
    ToolFlags ask_tools;
    ask->add_option("--index", ask_index, "Index bundle directory")->required();
    ask->add_option("--question", question, "The question to answer")->required();
    ask->add_option("--trace", trace_path, "Write the agent trace to this file");
    ask_backends.add_to(*ask);
    ask_tools.add_to(*ask);

    auto* eval = app.add_subcommand("eval", "Run a multiple-choice QA set and report accuracy");
    std::string qa_path;
    std::string eval_index;
    std::string eval_root;
    std::string eval_out;
    int eval_workers = 4;
    BackendFlags eval_backends;
    ToolFlags eval_tools;
    eval->add_option("--qa", qa_path, "QA JSONL file")->required();
    eval->add_option("--index", eval_index, "Single index bundle for every item");
    eval->add_option("--index-root", eval_root, "Directory holding one bundle per video id");
    eval->add_option("--out", eval_out, "Report output directory")->required();
    eval->add_option("--workers", eval_workers, "Concurrent agent runs");
    eval_backends.add_to(*eval);
    eval_tools.add_to(*eval);

    auto* validate = app.add_subcommand("validate", "Check every invariant of a bundle");
    std::string validate_index;
    validate->add_option("--index", validate_index, "Index bundle directory")->required();

    auto* dump = app.add_subcommand("dump-trace", "Pretty-print an agent trace export");
    std::string dump_path;
    dump->add_option("--trace", dump_path, "Trace JSONL file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed())
            return cmd_build(manifest_path, build_backends, out_dir, build_config, segment_len,
                             frames_per_segment);
        if (ask->parsed())
            return cmd_ask(ask_index, ask_backends, question, trace_path, ask_tools);
        if (eval->parsed()) {
            if (eval_index.empty() == eval_root.empty()) {
                std::cerr << "eval needs exactly one of --index or --index-root\n";
                return 2;
            }
            return cmd_eval(qa_path, eval_index, eval_root, eval_backends, eval_out, eval_workers,
                            eval_tools);
        }
        if (validate->parsed())
            return cmd_validate(validate_index);
        if (dump->parsed())
            return cmd_dump_trace(dump_path);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
