#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "immse/input_law.hpp"

namespace immse::cli {

enum ExitCode : int { kPass = 0, kVerificationFailure = 1, kUsage = 2, kNonConvergence = 3 };

// Runs one command line (without the program name); artifacts go to files
// named by --out or to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a:b:step" (inclusive), "a,b,c" or a single value; sorted, duplicates removed.
std::vector<double> parse_grid(const std::string& text);
// 10^(dB/10) applied to parse_grid.
std::vector<double> parse_grid_db(const std::string& text);

// binary | gaussian[:mean,var] | atoms:v1,v2,...[/p1,p2,...] |
// mixture:w,m,v,w,m,v,... | uniform:lo,hi[,points]
InputLaw parse_input(const std::string& text);

// "k=v,k=v"; keys must be in `allowed`.
std::map<std::string, double> parse_params(const std::string& text, const std::vector<std::string>& allowed);

// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace immse::cli
