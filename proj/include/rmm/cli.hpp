#pragma once

// rmm_lab command line: price, construct, hedge-surface, simulate-vault.
// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.

#include <iosfwd>

namespace rmm::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rmm::cli
