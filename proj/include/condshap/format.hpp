#pragma once

#include <string>

namespace condshap {

// Shortest decimal string that round-trips the double exactly. All emitted
// files use this so byte-identical output is a pure function of the values.
std::string format_double(double value);

}  // namespace condshap
