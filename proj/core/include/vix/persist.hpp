#pragma once

#include "vix/model.hpp"

#include <filesystem>

namespace vix {

/// Writes the index bundle into `dir`: a versioned header with per-file
/// checksums, human-inspectable JSONL level files (segments, entities,
/// scenes), the global summary, and the vector arrays as raw little-endian
/// float32 with a sidecar record table. load(save(db)) is structurally equal
/// to db, vectors bit-exact.
void save_index(const IndexDatabase& db, const std::filesystem::path& dir);

/// Loads a bundle. Throws VersionMismatch for unsupported format versions and
/// CorruptBundle when a file is missing, truncated, or fails its checksum.
IndexDatabase load_index(const std::filesystem::path& dir);

} // namespace vix
