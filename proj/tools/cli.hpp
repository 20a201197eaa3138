#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rmtlab::cli {

// runs one command; `out` receives the artifact unless --output names a file
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace rmtlab::cli
