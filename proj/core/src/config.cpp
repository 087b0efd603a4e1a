#include "vix/config.hpp"

#include "vix/errors.hpp"
#include "vix/http_backend.hpp"
#include "vix/mock_backends.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>

namespace vix {

namespace {

using nlohmann::json;

BackendSpec spec_from_json(const json& j, const BackendSpec& defaults) {
    BackendSpec s = defaults;
    s.kind = j.value("kind", s.kind);
    s.base_url = j.value("base_url", s.base_url);
    s.model = j.value("model", s.model);
    s.api_key = j.value("api_key", s.api_key);
    s.api_key_env = j.value("api_key_env", s.api_key_env);
    s.playbook = j.value("playbook", s.playbook);
    s.max_frames = j.value("max_frames", s.max_frames);
    s.dim = j.value("dim", s.dim);
    return s;
}

void resolve_playbook(BackendSpec& spec, const std::filesystem::path& base_dir) {
    if (spec.playbook.empty())
        return;
    std::filesystem::path p(spec.playbook);
    if (p.is_relative())
        spec.playbook = (base_dir / p).string();
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

void fill_from_env(BackendSpec& spec, const char* url_var, const char* model_var,
                   const char* key_var) {
    if (spec.base_url.empty())
        spec.base_url = env_or(url_var, "");
    if (spec.model.empty())
        spec.model = env_or(model_var, "");
    if (spec.api_key.empty() && spec.api_key_env.empty())
        spec.api_key = env_or(key_var, "");
}

std::string resolve_api_key(const BackendSpec& spec) {
    if (!spec.api_key.empty())
        return spec.api_key;
    if (!spec.api_key_env.empty())
        return env_or(spec.api_key_env.c_str(), "");
    return "";
}

Playbook load_playbook(const BackendSpec& spec) {
    if (spec.playbook.empty())
        return {};
    return Playbook::from_file(spec.playbook);
}

std::shared_ptr<ChatBackend> make_chat(const BackendSpec& spec, const char* role) {
    if (spec.kind == "mock")
        return std::make_shared<MockModelChat>(load_playbook(spec));
    if (spec.kind == "http") {
        HttpOptions opts;
        opts.base_url = spec.base_url;
        opts.model = spec.model;
        opts.api_key = resolve_api_key(spec);
        return std::make_shared<HttpChatBackend>(opts);
    }
    throw InputError(fmt::format("{}: unknown backend kind \"{}\"", role, spec.kind));
}

std::shared_ptr<VisionBackend> make_vision(const BackendSpec& spec, const char* role) {
    if (spec.kind == "mock")
        return std::make_shared<MockVision>(load_playbook(spec).vision_rules,
                                            static_cast<std::size_t>(spec.max_frames));
    if (spec.kind == "http") {
        HttpOptions opts;
        opts.base_url = spec.base_url;
        opts.model = spec.model;
        opts.api_key = resolve_api_key(spec);
        return std::make_shared<HttpVisionBackend>(opts,
                                                   static_cast<std::size_t>(spec.max_frames));
    }
    throw InputError(fmt::format("{}: unknown backend kind \"{}\"", role, spec.kind));
}

} // namespace

BackendsConfig BackendsConfig::mock_defaults() {
    BackendsConfig c;
    c.visual_embedder.dim = 48;
    return c;
}

BackendsConfig BackendsConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError(fmt::format("cannot open backends config {}", path.string()));
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError(fmt::format("backends config {} is not valid JSON", path.string()));

    BackendsConfig c = mock_defaults();
    c.builder = spec_from_json(j.value("builder", json::object()), c.builder);
    c.reasoner = spec_from_json(j.value("reasoner", json::object()), c.reasoner);
    c.captioner = spec_from_json(j.value("captioner", json::object()), c.builder);
    c.inspector = spec_from_json(j.value("inspector", json::object()), c.reasoner);
    c.text_embedder = spec_from_json(j.value("text_embedder", json::object()), c.text_embedder);
    c.visual_embedder =
        spec_from_json(j.value("visual_embedder", json::object()), c.visual_embedder);

    std::filesystem::path base = path.parent_path();
    resolve_playbook(c.builder, base);
    resolve_playbook(c.reasoner, base);
    resolve_playbook(c.captioner, base);
    resolve_playbook(c.inspector, base);
    return c;
}

void BackendsConfig::apply_env() {
    fill_from_env(builder, "VIX_BUILDER_BASE_URL", "VIX_BUILDER_MODEL", "VIX_BUILDER_API_KEY");
    fill_from_env(reasoner, "VIX_REASONER_BASE_URL", "VIX_REASONER_MODEL",
                  "VIX_REASONER_API_KEY");
    fill_from_env(captioner, "VIX_BUILDER_BASE_URL", "VIX_BUILDER_MODEL", "VIX_BUILDER_API_KEY");
    fill_from_env(inspector, "VIX_REASONER_BASE_URL", "VIX_REASONER_MODEL",
                  "VIX_REASONER_API_KEY");
}

BackendSet make_backends(const BackendsConfig& config) {
    BackendSet set;
    set.builder = make_chat(config.builder, "builder");
    set.reasoner = make_chat(config.reasoner, "reasoner");
    set.captioner = make_vision(config.captioner, "captioner");
    set.inspector = make_vision(config.inspector, "inspector");

    if (config.text_embedder.kind == "mock") {
        set.text_embedder = std::make_shared<HashTextEmbedder>(config.text_embedder.dim);
    } else if (config.text_embedder.kind == "http") {
        HttpOptions opts;
        opts.base_url = config.text_embedder.base_url;
        opts.model = config.text_embedder.model;
        opts.api_key = resolve_api_key(config.text_embedder);
        set.text_embedder = std::make_shared<HttpTextEmbedder>(opts);
    } else {
        throw InputError(fmt::format("text_embedder: unknown backend kind \"{}\"",
                                     config.text_embedder.kind));
    }

    if (config.visual_embedder.kind == "mock") {
        set.visual_embedder = std::make_shared<HashVisualEmbedder>(config.visual_embedder.dim);
    } else if (config.visual_embedder.kind == "http") {
        HttpOptions opts;
        opts.base_url = config.visual_embedder.base_url;
        opts.model = config.visual_embedder.model;
        opts.api_key = resolve_api_key(config.visual_embedder);
        set.visual_embedder = std::make_shared<HttpVisualEmbedder>(opts);
    } else {
        throw InputError(fmt::format("visual_embedder: unknown backend kind \"{}\"",
                                     config.visual_embedder.kind));
    }
    return set;
}

SourceManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError(fmt::format("cannot open manifest {}", path.string()));
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError(fmt::format("manifest {} is not valid JSON", path.string()));

    SourceManifest m;
    m.video_id = j.value("video_id", "");
    if (m.video_id.empty())
        throw ParseError(fmt::format("manifest {} lacks a video_id", path.string()));
    if (!j.contains("duration_s") || !j["duration_s"].is_number())
        throw ParseError(fmt::format("manifest {} lacks duration_s", path.string()));
    m.duration_s = j["duration_s"].get<double>();
    m.transcript_path = j.value("transcript", "");
    m.frames_dir = j.value("frames_dir", "");
    m.language_tag = j.value("language", "");
    m.segment_len_s = j.value("segment_len_s", 30.0);
    m.frames_per_segment = j.value("frames_per_segment", 20);

    std::filesystem::path base = path.parent_path();
    auto resolve = [&](std::string& field) {
        if (field.empty())
            return;
        std::filesystem::path p(field);
        if (p.is_relative())
            field = (base / p).string();
    };
    resolve(m.transcript_path);
    resolve(m.frames_dir);
    return m;
}

} // namespace vix
