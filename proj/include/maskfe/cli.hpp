#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maskfe::cli {

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, numeric = 3 };

int run(int argc, char** argv);
// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maskfe::cli
