#pragma once

#include <functional>
#include <iosfwd>

namespace getnext::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUserError = 2 };

using EnvLookup = std::function<const char*(const char*)>;

// Parses argv (argv[0] is the program name), runs one subcommand and returns
// its exit code. Nothing is thrown.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const EnvLookup& env);

}  // namespace getnext::cli
