#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace trollkit {

/// Lowercases ASCII letters and splits on whitespace. Non-ASCII bytes pass
/// through unchanged.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace trollkit
