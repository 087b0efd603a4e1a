#pragma once

#include <json.hpp>

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace vix {

/// Line-delimited build log: per-phase counts, fallbacks, and warnings. Order
/// of appends is deterministic because all phases record sequentially (fan-out
/// phases gather results first).
class BuildReport {
public:
    void add(nlohmann::json record);
    std::vector<nlohmann::json> records() const;
    std::size_t count(std::string_view phase) const;
    std::string to_jsonl() const;
    void write_jsonl(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::vector<nlohmann::json> records_;
};

} // namespace vix
