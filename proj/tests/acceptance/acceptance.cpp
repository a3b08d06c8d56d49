// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.
//   acceptance [--only 1,2,...] [--json report.json] [--manifests dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <nlohmann/json.hpp>

#include "immse/dt_process.hpp"
#include "immse/representations.hpp"
#include "immse/scalar_channel.hpp"
#include "immse/spectral.hpp"
#include "immse/telegraph.hpp"
#include "immse/vector_channel.hpp"
#include "immse/wonham.hpp"

using namespace immse;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kBaseSeed = 20050401;

std::uint64_t seed_for(int criterion) { return substream_seed(kBaseSeed, static_cast<std::uint64_t>(criterion)); }

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
  Report report;
};

// Monte Carlo criteria record a manifest and the numbers they produced; the
// reproducibility criterion replays every manifest with one thread.
struct McRun {
  int criterion = 0;
  json manifest;
  std::vector<double> numbers;
};

using McBody = std::function<Report(const json&)>;

std::vector<double> numbers_of(const Report& r) {
  std::vector<double> v;
  for (const auto& c : r.checks) v.insert(v.end(), {c.lhs, c.rhs, c.deviation, c.tolerance});
  return v;
}

McConfig mc_from(const json& m) {
  McConfig mc;
  mc.seed = m["seed"].get<std::uint64_t>();
  mc.paths = m["paths"].get<std::size_t>();
  mc.threads = m["threads"].get<unsigned>();
  if (m.contains("dt")) mc.dt = m["dt"].get<double>();
  if (m.contains("T")) mc.T = m["T"].get<double>();
  return mc;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

InputLaw three_mixture() { return InputLaw::mixture({{0.3, -2.0, 0.5}, {0.4, 0.0, 0.2}, {0.3, 1.5, 1.0}}); }

const std::vector<double> kGrid{0.1, 0.5, 1.0, 2.0, 5.0, 10.0};

// ---------- deterministic criteria ----------

Outcome c1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  o.report.suite = "immse";
  o.report.append(verify_immse(InputLaw::gaussian(0.0, 1.0), kGrid, 1e-4, 1e-6), "gaussian: ");
  o.report.append(verify_immse(InputLaw::binary(), kGrid, 1e-4, 1e-6), "binary: ");
  o.report.append(verify_immse(three_mixture(), kGrid, 1e-4, 1e-6), "mixture: ");
  const double t = elapsed(t0);
  o.pass = o.report.passed() && t < 10.0;
  o.detail = "max |dI/dsnr - mmse/2| = " + sci(o.report.max_deviation()) + " (tol 1e-6), " + sci(t) + " s (limit 10 s)";
  return o;
}

Outcome c2() {
  Outcome o;
  Report& r = o.report;
  r.suite = "closed_forms";
  for (double s : kGrid) {
    const ScalarChannel g(InputLaw::gaussian(0.0, 1.0), s), b(InputLaw::binary(), s);
    const std::string at = " snr=" + sci(s);
    r.expect_close("gaussian mmse" + at, mmse(g), mmse_gaussian_closed(1.0, s), 1e-10);
    r.expect_close("gaussian mi" + at, mutual_information(g), mi_gaussian_closed(1.0, s), 1e-10);
    r.expect_close("binary mmse" + at, mmse(b), mmse_binary_closed(s), 1e-9);
    r.expect_close("binary mi" + at, mutual_information(b), mi_binary_closed(s), 1e-9);
  }
  double dg = 0.0, db = 0.0;
  for (const auto& c : r.checks) {
    double& d = c.name.rfind("gaussian", 0) == 0 ? dg : db;
    d = std::max(d, c.deviation);
  }
  o.pass = r.passed();
  o.detail = "gaussian max dev " + sci(dg) + " (tol 1e-10), binary max dev " + sci(db) + " (tol 1e-9)";
  return o;
}

Outcome c3() {
  Outcome o;
  o.report = verify_integral_form(InputLaw::binary(), 4.0, 400, 1e-6, 1e-5);
  o.pass = o.report.passed();
  o.detail = "binary snr=4: adaptive dev " + sci(o.report.checks.at(0).deviation) + " (tol 1e-6), trapezoid dev " +
             sci(o.report.checks.at(1).deviation) + " (tol 1e-5)";
  return o;
}

Eigen::MatrixXd random_matrix(Engine& eng, Eigen::Index r, Eigen::Index c) {
  boost::random::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(eng);
  return m;
}

AtomSet cube_atoms(int k) {
  AtomSet a;
  for (int b = 0; b < (1 << k); ++b) {
    Eigen::VectorXd p(k);
    for (int j = 0; j < k; ++j) p(j) = (b >> j & 1) ? 1.0 : -1.0;
    a.points.push_back(p);
  }
  a.probs.assign(a.points.size(), 1.0 / static_cast<double>(a.points.size()));
  return a;
}

// ---------- Monte Carlo criteria ----------

Report c4_atoms(const json& m) {
  Engine eng = make_engine(m["seed"].get<std::uint64_t>(), 1000);
  const Eigen::MatrixXd H = random_matrix(eng, 3, 3);
  return vector_immse_check(VectorChannelModel::common(H, cube_atoms(3), m["snr"].get<double>()), 1e-4, mc_from(m));
}

Outcome c4(std::vector<McRun>& runs, unsigned threads) {
  Outcome o;
  Report& r = o.report;
  r.suite = "vector_immse";
  const std::uint64_t seed = seed_for(4);
  const double snrs[] = {0.5, 1.0, 2.0, 5.0, 10.0};
  McConfig unused;
  for (int i = 0; i < 5; ++i) {
    Engine eng = make_engine(seed, static_cast<std::uint64_t>(i));
    const Eigen::MatrixXd H = random_matrix(eng, 3, 3);
    const Eigen::MatrixXd A = random_matrix(eng, 3, 3);
    const Eigen::MatrixXd cov = A * A.transpose() / 3.0 + 0.5 * Eigen::MatrixXd::Identity(3, 3);
    const auto model = VectorChannelModel::common(H, GaussianVec{Eigen::VectorXd::Zero(3), cov}, snrs[i]);
    r.append(vector_immse_check(model, 1e-4, unused, 1e-7), "gaussian instance " + std::to_string(i) + ": ");
  }
  const double gauss_dev = r.max_deviation();
  json m{{"criterion", 4}, {"seed", seed}, {"paths", 1000000}, {"threads", threads}, {"snr", 1.0},
         {"model", "3x3 random H (substream 1000), 8 atoms {+-1}^3"}};
  const Report atoms = c4_atoms(m);
  runs.push_back({4, m, numbers_of(atoms)});
  r.append(atoms, "atoms: ");
  const auto& a = atoms.checks.at(0);
  o.pass = r.passed();
  o.detail = "gaussian max dev " + sci(gauss_dev) + " (tol 1e-7); atoms |diff| " + sci(a.deviation) + " <= 3 SE " +
             sci(a.tolerance) + " at 1e6 draws";
  return o;
}

Report c5_binary(const json& m) {
  AtomSet b;
  b.points = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  b.probs = {0.5, 0.5};
  return de_bruijn_check(VectorChannelModel::common(Eigen::MatrixXd::Identity(1, 1), b, m["snr"].get<double>()), 1e-4,
                         mc_from(m));
}

Outcome c5(std::vector<McRun>& runs, unsigned threads) {
  Outcome o;
  Report& r = o.report;
  r.suite = "debruijn";
  double fisher_dev = 0.0;
  for (const auto& [name, law] : std::vector<std::pair<std::string, InputLaw>>{
           {"binary", InputLaw::binary()}, {"mixture", three_mixture()}, {"gaussian", InputLaw::gaussian(0.0, 1.0)}}) {
    for (double s : {0.5, 2.0, 5.0}) {
      const ScalarChannel ch(law, s);
      auto& c = r.expect_close("Fisher routes " + name + " snr=" + sci(s), fisher_information(ch),
                               fisher_information_direct(ch), 1e-8);
      fisher_dev = std::max(fisher_dev, c.deviation);
    }
  }
  Engine eng = make_engine(seed_for(5), 0);
  const Eigen::MatrixXd H = random_matrix(eng, 3, 3);
  const Eigen::MatrixXd A = random_matrix(eng, 3, 3);
  const Eigen::MatrixXd cov = A * A.transpose() / 3.0 + 0.5 * Eigen::MatrixXd::Identity(3, 3);
  McConfig unused;
  const Report g =
      de_bruijn_check(VectorChannelModel::common(H, GaussianVec{Eigen::VectorXd::Zero(3), cov}, 2.0), 1e-4, unused, 1e-7);
  r.append(g, "gaussian 3x3: ");
  json m{{"criterion", 5}, {"seed", seed_for(5)}, {"paths", 1000000}, {"threads", threads}, {"snr", 1.0},
         {"model", "scalar binary"}};
  const Report b = c5_binary(m);
  runs.push_back({5, m, numbers_of(b)});
  r.append(b, "binary: ");
  o.pass = r.passed();
  o.detail = "Fisher routes max dev " + sci(fisher_dev) + " (tol 1e-8); de Bruijn gaussian dev " +
             sci(g.max_deviation()) + " (tol 1e-7); binary |diff| " + sci(b.checks.at(0).deviation) + " <= 3 SE " +
             sci(b.checks.at(0).tolerance);
  return o;
}

Report c6_body(const json& m) {
  const double s = m["snr"].get<double>();
  const auto e = averaged_divergence_derivative(InputLaw::binary(), s, mc_from(m));
  Report r;
  r.suite = "divergence_derivative";
  r.expect_close("E_x divergence derivative vs mmse/2", e.value, 0.5 * mmse(ScalarChannel(InputLaw::binary(), s)),
                 3.0 * e.se);
  return r;
}

Outcome c6(std::vector<McRun>& runs, unsigned threads) {
  Outcome o;
  json m{{"criterion", 6}, {"seed", seed_for(6)}, {"paths", 1000000}, {"threads", threads}, {"snr", 1.0}};
  o.report = c6_body(m);
  runs.push_back({6, m, numbers_of(o.report)});
  const auto& c = o.report.checks.at(0);
  o.pass = o.report.passed();
  o.detail = "binary snr=1: " + sci(c.lhs) + " vs " + sci(c.rhs) + ", |diff| " + sci(c.deviation) + " <= 3 SE " +
             sci(c.tolerance) + " at 1e6 draws";
  return o;
}

AtomSet two_user_binary() { return cube_atoms(2); }

Eigen::MatrixXd two_user_h() {
  Eigen::MatrixXd h(2, 2);
  h << 1.0, 0.5, 0.5, 1.0;
  return h;
}

Report c7_body(const json& m) {
  const auto snr = m["snr"].get<std::vector<double>>();
  const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(snr.data(), static_cast<Eigen::Index>(snr.size()));
  return multiuser_check(VectorChannelModel(two_user_h(), two_user_binary(), s), 1e-4, mc_from(m),
                         m["tolerance"].get<double>());
}

Outcome c7(std::vector<McRun>& runs, unsigned threads) {
  Outcome o;
  Report& r = o.report;
  r.suite = "multiuser";
  json unequal{{"criterion", 7}, {"seed", seed_for(7)}, {"paths", 1000000}, {"threads", threads},
               {"snr", {1.0, 2.0}}, {"tolerance", 0.0}};
  json equal{{"criterion", 7}, {"seed", substream_seed(seed_for(7), 1)}, {"paths", 1000000}, {"threads", threads},
             {"snr", {1.0, 1.0}}, {"tolerance", 1e-6}};
  const Report a = c7_body(unequal);
  const Report b = c7_body(equal);
  runs.push_back({7, unequal, numbers_of(a)});
  runs.push_back({7, equal, numbers_of(b)});
  r.append(a, "snr=(1,2): ");
  r.append(b, "snr=(1,1): ");
  double worst = 0.0;
  for (const auto& c : r.checks) worst = std::max(worst, c.deviation / c.tolerance);
  o.pass = r.passed();
  o.detail = "two-user binary H=[[1,.5],[.5,1]]: per-user LHS/RHS and equal-snr sum within tolerance (1e-6 + 3 SE); "
             "worst deviation/tolerance " + sci(worst);
  return o;
}

Outcome c8() {
  Outcome o;
  Report& r = o.report;
  r.suite = "appendixE";
  double rec = 0.0;
  for (double xi : {-0.5, -2.0, -8.0}) {
    const Report x = f_recurrence_check(xi, 1e-8);
    rec = std::max(rec, x.max_deviation());
    r.append(x, "xi=" + sci(xi) + ": ");
  }
  const double grid[] = {0.5, 1.0, 3.16, 10.0, 31.6};
  const Report d = telegraph_differential_check(1.0, grid, 1e-4);
  r.append(d);
  o.pass = r.passed();
  o.detail = "recurrences max rel dev " + sci(rec) + " (tol 1e-8); differential form max dev " + sci(d.max_deviation()) +
             " (tol 1e-4)";
  return o;
}

Outcome c9() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const double grid[] = {0.5, 1.0, 3.16, 10.0, 31.6};
  o.report = verify_thm7(1.0, grid, 1e-4);
  double dev = 0.0;
  for (const auto& c : o.report.checks)
    if (c.name.rfind("cmmse vs averaged mmse", 0) == 0) dev = std::max(dev, c.deviation);
  const double t = elapsed(t0);
  o.pass = o.report.passed() && t < 60.0;
  o.detail = "nu=1: max |cmmse - (1/snr) int mmse| = " + sci(dev) + " (tol 1e-4), low-snr ratio " +
             sci(o.report.checks.back().lhs) + ", " + sci(t) + " s (limit 60 s)";
  return o;
}

Report c10_body(const json& m) {
  const TelegraphModel tm{m["nu"].get<double>(), m["snr"].get<double>()};
  return wonham_check(tm, mc_from(m));
}

Outcome c10(std::vector<McRun>& runs, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  json m{{"criterion", 10}, {"seed", seed_for(10)}, {"paths", 100000}, {"threads", threads}, {"dt", 1e-3},
         {"T", 10.0},      {"nu", 1.0},          {"snr", std::pow(10.0, 0.5)}};
  o.report = c10_body(m);
  const double t = elapsed(t0);
  runs.push_back({10, m, numbers_of(o.report)});
  const auto& causal = o.report.checks.at(0);
  const auto& smooth = o.report.checks.at(1);
  o.pass = causal.pass && smooth.pass && t < 300.0;
  o.detail = "causal " + sci(causal.lhs) + " vs " + sci(causal.rhs) + " (|d| " + sci(causal.deviation) + " <= 3 SE " +
             sci(causal.tolerance) + "), smoothed " + sci(smooth.lhs) + " vs " + sci(smooth.rhs) + " (|d| " +
             sci(smooth.deviation) + " <= 3 SE " + sci(smooth.tolerance) + "), " + sci(t) + " s (limit 300 s)";
  return o;
}

Outcome c11() {
  Outcome o;
  const SpectrumModel s{1.0, 1.0};
  const double grid[] = {0.1, 0.5, 1.0, 3.0, 10.0, 100.0, 1e4};
  o.report = spectral_check(s, grid, 1e-8);
  const double closed_dev = o.report.max_deviation();
  const double high[] = {1e4};
  const Report ratio = spectral_ratio_check(s, high, 0.02, 1e-3, 0.005);
  o.report.append(ratio);
  o.pass = o.report.passed();
  o.detail = "closed forms max dev " + sci(closed_dev) + " (tol 1e-8); ratio at 1e4 = " + sci(ratio.checks.at(0).lhs) +
             " in [1.96, 2.04]; low-snr ratio at 1e-3 = " + sci(ratio.checks.back().lhs) + " in [1.99, 2.01]";
  return o;
}

Outcome c12() {
  Outcome o;
  const double a[] = {0.0, 0.5, 0.9};
  const double s[] = {0.5, 1.0, 2.0};
  const std::size_t n[] = {10, 50};
  o.report = dt_lattice_check(a, s, n, 1e-6);
  std::size_t ineq = 0;
  for (const auto& c : o.report.checks) ineq += c.kind == "less_equal";
  o.pass = o.report.passed();
  o.detail = "3x3x2 lattice: derivative identity max dev " + sci(o.report.max_deviation()) + " (tol 1e-6), " +
             std::to_string(ineq) + " inequalities hold";
  return o;
}

Outcome c13() {
  Outcome o;
  Report& r = o.report;
  r.suite = "representations";
  const auto four = InputLaw::atoms({-3.0, -1.0, 1.0, 3.0}, {0.25, 0.25, 0.25, 0.25});
  const double h = entropy_via_mmse(four, Mapping::identity(), {80.0, TailEstimator::exponential_fit}).value;
  r.expect_close("entropy via mmse vs ln 4", h, std::log(4.0), 1e-3);
  const double dg = nongaussianness(InputLaw::gaussian(0.0, 1.0), {1e3, TailEstimator::gaussian_tail}).value;
  r.expect_close("non-Gaussianness of N(0,1)", dg, 0.0, 1e-9);
  const auto mix = InputLaw::mixture({{0.5, -1.0, 0.25}, {0.5, 1.0, 0.25}});
  const double dm = nongaussianness(mix, {1e4, TailEstimator::gaussian_tail}).value;
  const double kl = divergence_from_gaussian(mix);
  r.expect_close("mixture non-Gaussianness vs direct KL", dm, kl, 1e-4);
  const JointAtoms same{{-1.0, 1.0}, {-1.0, 1.0}, {0.5, 0.5}};
  const double mi = mi_via_mmse_difference(same, {80.0, TailEstimator::exponential_fit}).value;
  r.expect_close("I(X;Z) via mmse difference, Z = X", mi, std::log(2.0), 2e-3);
  const TailPolicy epi{1e3, TailEstimator::gaussian_tail};
  double min_slack = 1e300;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const Report e = gamma_epi_check(random_mixture(seed_for(13), 2 * i), random_mixture(seed_for(13), 2 * i + 1), epi);
    min_slack = std::min(min_slack, e.checks.back().deviation);
    r.append(e, "pair " + std::to_string(i) + ": ");
  }
  o.pass = r.passed();
  o.detail = "H dev " + sci(std::abs(h - std::log(4.0))) + " (1e-3), D_gauss " + sci(std::abs(dg)) + " (1e-9), D_mix dev " +
             sci(std::abs(dm - kl)) + " (1e-4), I dev " + sci(std::abs(mi - std::log(2.0))) +
             " (2e-3), EPI min slack " + sci(min_slack) + " over 5 pairs";
  return o;
}

Outcome c14() {
  Outcome o;
  std::vector<double> grid;
  for (int k = 0; k <= 8; ++k) grid.push_back(std::pow(10.0, -3.0 + 0.25 * k));
  o.report = taylor_order_check(InputLaw::binary(), grid, 3.8, 4.8);
  o.pass = o.report.passed();
  std::string slopes;
  for (const auto& c : o.report.checks)
    if (c.kind == "less_equal") slopes += (slopes.empty() ? "" : ", ") + c.name + " = " + sci(c.rhs);
  o.detail = "binary on [1e-3, 1e-1]: " + slopes;
  return o;
}

Outcome c15(const std::vector<McRun>& runs, const std::map<int, McBody>& bodies) {
  Outcome o;
  o.report.suite = "reproducibility";
  if (runs.empty()) {
    o.detail = "no Monte Carlo criterion ran";
    return o;
  }
  std::size_t same = 0;
  std::string which;
  for (const auto& run : runs) {
    json m = run.manifest;
    m["threads"] = 1;
    const auto again = numbers_of(bodies.at(run.criterion)(m));
    const bool identical = again.size() == run.numbers.size() &&
                           std::memcmp(again.data(), run.numbers.data(), again.size() * sizeof(double)) == 0;
    same += identical;
    which += (which.empty() ? "" : ", ") + std::to_string(run.criterion) + (identical ? " ok" : " DIFF");
    o.report.expect_close("criterion " + std::to_string(run.criterion) + " replay (seed " +
                              std::to_string(run.manifest["seed"].get<std::uint64_t>()) + ")",
                          identical ? 0.0 : 1.0, 0.0, 0.0);
  }
  o.pass = same == runs.size();
  o.detail = std::to_string(same) + "/" + std::to_string(runs.size()) +
             " manifests replayed bit-identically single-threaded (" + which + ")";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::string json_path, manifest_dir;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream s(argv[++i]);
      std::string item;
      while (std::getline(s, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--json" && i + 1 < argc) {
      json_path = argv[++i];
    } else if (a == "--manifests" && i + 1 < argc) {
      manifest_dir = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only 1,2,...] [--json path] [--manifests dir]\n";
      return 2;
    }
  }
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<McRun> runs;
  const std::map<int, McBody> bodies{{4, c4_atoms}, {5, c5_binary}, {6, c6_body}, {7, c7_body}, {10, c10_body}};

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scalar I-MMSE identity", c1},
      {"closed-form cross-checks", c2},
      {"integral form", c3},
      {"vector I-MMSE", [&] { return c4(runs, threads); }},
      {"de Bruijn and Fisher routes", [&] { return c5(runs, threads); }},
      {"divergence derivative", [&] { return c6(runs, threads); }},
      {"multiuser derivative", [&] { return c7(runs, threads); }},
      {"f(i,j) recurrences and differential form", c8},
      {"causal vs averaged noncausal (telegraph)", c9},
      {"Wonham filter / Yao smoother Monte Carlo", [&] { return c10(runs, threads); }},
      {"spectral OU", c11},
      {"discrete-time AR(1)", c12},
      {"MMSE representations", c13},
      {"low-snr Taylor orders", c14},
      {"reproducibility", [&] { return c15(runs, bodies); }},
  };

  json all = json::array();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double t = elapsed(t0);
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (id < 10 ? " " : "") << id << " " << criteria[i].first << ": "
              << o.detail << " [" << sci(t) << " s]" << std::endl;
    json j;
    j["criterion"] = id;
    j["title"] = criteria[i].first;
    j["pass"] = o.pass;
    j["detail"] = o.detail;
    j["seconds"] = t;
    j["report"] = to_json(o.report);
    all.push_back(j);
  }
  if (!manifest_dir.empty()) {
    std::filesystem::create_directories(manifest_dir);
    std::map<int, int> seen;
    for (const auto& r : runs) {
      const int k = seen[r.criterion]++;
      std::ofstream(manifest_dir + "/criterion" + std::to_string(r.criterion) + (k ? "_" + std::to_string(k) : "") +
                    ".manifest.json")
          << r.manifest.dump(2) << "\n";
    }
  }
  if (!json_path.empty()) std::ofstream(json_path) << all.dump(2) << "\n";
  return failed == 0 ? 0 : 1;
}
