#include "specnip/corpus.hpp"

#include <map>

namespace specnip::detail {
const std::map<std::string, std::string>& corpus_files();
}

namespace specnip {

std::vector<std::string> corpus_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : detail::corpus_files()) out.push_back(name);
    return out;
}

std::optional<std::string> corpus_file(std::string_view name) {
    const auto& files = detail::corpus_files();
    auto it = files.find(std::string(name));
    if (it == files.end()) return std::nullopt;
    return it->second;
}

}  // namespace specnip
