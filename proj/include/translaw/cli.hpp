#pragma once
// Command-line driver, callable in-process so tests can run commands
// without spawning. Arguments mirror `main`'s argv without the program
// name. Returns the process exit code: 0 when every requested artifact was
// written, 2 for usage errors, 1 otherwise. Failures print exactly one
// stderr line of the form "error: <class>: <detail>".

#include <iosfwd>
#include <string>
#include <vector>

namespace translaw::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace translaw::cli
