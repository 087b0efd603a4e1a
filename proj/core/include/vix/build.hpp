#pragma once

#include "vix/backends.hpp"
#include "vix/model.hpp"
#include "vix/report.hpp"

namespace vix {

/// Runs the whole offline indexing pipeline over one video: segment level,
/// canonical entities, scenes, global summary, and the vector store. The
/// result passes validate_database; under mock backends the output is a pure
/// function of the inputs.
IndexDatabase build_index(const SourceManifest& manifest, const BuildConfig& config,
                          const BackendSet& backends, BuildReport& report);

} // namespace vix
