#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace immse {

// One numerical comparison. For equalities deviation = |lhs - rhs| and the
// check passes when deviation <= tolerance; for inequalities lhs <= rhs is
// required, deviation holds the signed slack rhs - lhs and tolerance the
// allowed violation.
struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string kind = "equal";  // "equal" | "less_equal"
};

struct Report {
  std::string suite;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  Check& expect_close(std::string name, double lhs, double rhs, double tolerance);
  Check& expect_less_equal(std::string name, double lhs, double rhs, double tolerance = 0.0);
  void note(std::string text) { notes.push_back(std::move(text)); }
  void append(const Report& other, const std::string& prefix = "");

  bool passed() const;
  double max_deviation() const;  // over equality checks
};

nlohmann::ordered_json to_json(const Check& c);
nlohmann::ordered_json to_json(const Report& r);

}  // namespace immse
