#include "vix/report.hpp"

#include "vix/errors.hpp"

#include <fmt/format.h>

#include <fstream>

namespace vix {

void BuildReport::add(nlohmann::json record) {
    std::scoped_lock lock(mu_);
    records_.push_back(std::move(record));
}

std::vector<nlohmann::json> BuildReport::records() const {
    std::scoped_lock lock(mu_);
    return records_;
}

std::size_t BuildReport::count(std::string_view phase) const {
    std::scoped_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& r : records_)
        if (r.value("phase", "") == phase)
            ++n;
    return n;
}

std::string BuildReport::to_jsonl() const {
    std::scoped_lock lock(mu_);
    std::string out;
    for (const auto& r : records_) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

void BuildReport::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError(fmt::format("cannot write build report {}", path.string()));
    out << to_jsonl();
}

} // namespace vix
