#pragma once

#include <string>

namespace diagscreen {

/// printf %g with the given number of significant digits. All delimited and
/// human-readable output funnels through this so files and tables are
/// byte-stable for identical inputs.
std::string format_significant(double value, int digits);

}  // namespace diagscreen
