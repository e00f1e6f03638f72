#include "diagscreen/format.hpp"

#include <cstdio>

namespace diagscreen {

std::string format_significant(double value, int digits) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
    return buffer;
}

}  // namespace diagscreen
