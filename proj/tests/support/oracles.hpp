#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "harness/ocr_store.hpp"

// Independently written reference implementations the library is checked
// against. Nothing here may call the library's own grouping or matching code.
namespace testsupport {

/// Connected components of the pairwise vertical-overlap relation, computed
/// by brute-force reachability closure. Groups hold token indices sorted
/// ascending; groups are ordered by their smallest index.
std::vector<std::vector<std::size_t>> oracle_line_partition(
    std::span<const harness::OcrToken> tokens, double threshold);

/// Character-scan containment decision over independently normalized text.
bool oracle_contains(const std::string& prediction, const std::vector<std::string>& answers);

/// The oracle's own normalization pass (same published rules, separate code).
std::string oracle_normalize(const std::string& text);

}  // namespace testsupport
