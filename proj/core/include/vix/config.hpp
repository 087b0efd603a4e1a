#pragma once

#include "vix/backends.hpp"
#include "vix/model.hpp"

#include <filesystem>
#include <string>

namespace vix {

/// One configured backend role. kind is "mock" or "http". Mock chat roles
/// read an optional playbook; http roles need base_url + model, with the API
/// key inline, via api_key_env, or via the role's VIX_*_API_KEY variable.
struct BackendSpec {
    std::string kind = "mock";
    std::string base_url;
    std::string model;
    std::string api_key;
    std::string api_key_env;
    std::string playbook; // mock roles: path to a playbook JSON
    int max_frames = 50;  // vision roles
    std::size_t dim = 64; // mock embedders
};

/// Full backend wiring. Precedence for every field: CLI flags (applied by the
/// caller after loading) > config file > environment variables.
struct BackendsConfig {
    BackendSpec builder;
    BackendSpec reasoner;
    BackendSpec captioner;       // defaults to the builder's transport
    BackendSpec inspector;       // defaults to the reasoner's transport
    BackendSpec text_embedder;
    BackendSpec visual_embedder;

    /// All-mock configuration used when no config file is given.
    static BackendsConfig mock_defaults();

    /// Reads the JSON config; playbook paths resolve relative to the file.
    static BackendsConfig from_file(const std::filesystem::path& path);

    /// Fills empty base_url/model/api_key fields from VIX_BUILDER_* and
    /// VIX_REASONER_* (weakest precedence).
    void apply_env();
};

/// Instantiates the configured backends.
BackendSet make_backends(const BackendsConfig& config);

/// Reads a source manifest JSON ({"video_id", "duration_s", "transcript",
/// "frames_dir", "language", "segment_len_s", "frames_per_segment"});
/// relative paths resolve against the manifest's directory.
SourceManifest load_manifest(const std::filesystem::path& path);

} // namespace vix
