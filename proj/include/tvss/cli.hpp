#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tvss {

// args excludes the program name. 0 ok, 1 usage, 2 runtime error (JSON on err).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct VectorReport {
    size_t codec = 0;
    size_t chain = 0;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty() && codec > 0 && chain > 0; }
};

// Reads <dir>/codec.txt and <dir>/chain.txt.
VectorReport check_vectors(const std::string& dir);

}  // namespace tvss
