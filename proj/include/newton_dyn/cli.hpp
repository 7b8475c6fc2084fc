#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "newton_dyn/polynomial.hpp"

namespace newton_dyn::cli {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// Map file: {"coeffs": [...]} (ascending, each a number or [re, im]) or
// {"roots": [...]}, plus an optional "normalize": bool. Throws InputError.
struct MapSpec {
    Polynomial poly{std::vector<Complex>{1.0}};
    bool normalize = false;
    Json source;
};

MapSpec parse_map_spec(const Json& j);
// Throws IoError when the file cannot be read, InputError when it is not a map.
MapSpec load_map_spec(const std::string& path);

// Pretty JSON with every floating value written with 17 significant digits.
std::string dump_report(const Json& j);

// Runs one command line (args exclude the program name). The report goes to
// out, diagnostics to err. Exit codes: 0 success, 2 input error, 3 a negative
// result under --strict, 1 any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace newton_dyn::cli
