#pragma once

#include "prnf/problems.hpp"

#include <string>

namespace prnf {

// CSV with a `# prnf-dataset v1` header and `# key = value` provenance lines,
// then one comma-separated row of d+s floats per sample (conditioning columns
// first). Floats use shortest round-trip decimal text.
void save_dataset(const Dataset& data, const std::string& path);

// Raises IoError on a missing file, bad header, or malformed rows.
Dataset load_dataset(const std::string& path);

} // namespace prnf
