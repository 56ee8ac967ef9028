#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace specnip {

// Programs, initial states and witnesses bundled into the library at build time.
std::vector<std::string> corpus_names();
std::optional<std::string> corpus_file(std::string_view name);

}  // namespace specnip
