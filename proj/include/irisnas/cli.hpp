#pragma once

#include <iosfwd>
#include <string>

namespace irisnas {

/// Entry point of the `irisnas` tool. Returns the process exit status.
int cli_main(int argc, const char* const* argv);

/// Shortest round-trip decimal form, always with a fractional part ("0.0", "0.025").
std::string format_number(double v);

}  // namespace irisnas
