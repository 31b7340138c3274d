#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kslab::cli {

enum ExitCode : int {
    Ok = 0,
    Internal = 1,
    Inconclusive = 2,
    Usage = 64,
    SchemaError = 65,
    MissingInput = 66,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kslab::cli
