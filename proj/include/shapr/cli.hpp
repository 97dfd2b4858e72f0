#pragma once

#include <iosfwd>

namespace shapr::cli {

/// Entry point of the `shapr` tool. Returns 0 on success, 1 on usage errors and 2 on
/// data or validation errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shapr::cli
