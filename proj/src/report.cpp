#include "immse/report.hpp"

#include <algorithm>
#include <cmath>

namespace immse {

namespace {

// JSON has no NaN/inf; they are emitted as null.
nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

Check& Report::expect_close(std::string name, double lhs, double rhs, double tolerance) {
  Check c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.deviation = std::abs(lhs - rhs);
  c.tolerance = tolerance;
  c.pass = std::isfinite(c.deviation) && c.deviation <= tolerance;
  checks.push_back(std::move(c));
  return checks.back();
}

Check& Report::expect_less_equal(std::string name, double lhs, double rhs, double tolerance) {
  Check c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.deviation = rhs - lhs;
  c.tolerance = tolerance;
  c.pass = std::isfinite(c.deviation) && c.deviation >= -tolerance;
  c.kind = "less_equal";
  checks.push_back(std::move(c));
  return checks.back();
}

void Report::append(const Report& other, const std::string& prefix) {
  for (auto c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
  for (const auto& n : other.notes) notes.push_back(prefix + n);
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

double Report::max_deviation() const {
  double m = 0.0;
  for (const auto& c : checks) {
    if (c.kind == "equal") m = std::max(m, c.deviation);
  }
  return m;
}

nlohmann::ordered_json to_json(const Check& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["kind"] = c.kind;
  j["lhs"] = number(c.lhs);
  j["rhs"] = number(c.rhs);
  j["deviation"] = number(c.deviation);
  j["tolerance"] = number(c.tolerance);
  j["pass"] = c.pass;
  return j;
}

nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["pass"] = r.passed();
  j["max_deviation"] = number(r.max_deviation());
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  j["notes"] = r.notes;
  return j;
}

}  // namespace immse
