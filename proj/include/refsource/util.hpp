#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace refsource {

std::string to_lower(std::string_view s);

// lowercase, strip punctuation, collapse whitespace runs to single spaces
std::string normalize_name(std::string_view s);

/// Decimal formatting with 9 significant digits ("%.9g"); used by every
/// numeric file format in the project so reruns are byte-identical.
std::string format_g9(double v);

std::string sha256_hex(std::string_view data);

std::vector<std::string> split(std::string_view s, char sep);

// Runs fn(i) for i in [0, n). jobs <= 1 runs inline; otherwise a block-cyclic
// thread pool. Callers own output ordering (write to pre-sized slots).
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace refsource
