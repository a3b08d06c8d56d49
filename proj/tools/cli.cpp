#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "immse/dt_process.hpp"
#include "immse/error.hpp"
#include "immse/representations.hpp"
#include "immse/scalar_channel.hpp"
#include "immse/spectral.hpp"
#include "immse/telegraph.hpp"
#include "immse/vector_channel.hpp"
#include "immse/wonham.hpp"

namespace immse::cli {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  if (b < e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::vector<double> numbers(const std::string& s) {
  std::vector<double> v;
  for (const auto& part : split(s, ',')) v.push_back(to_double(part));
  return v;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty snr grid");
  std::vector<double> g;
  if (text.find(':') != std::string::npos) {
    const auto p = split(text, ':');
    if (p.size() != 3) throw std::invalid_argument("grid must be a:b:step, got '" + text + "'");
    const double a = to_double(p[0]), b = to_double(p[1]), step = to_double(p[2]);
    if (!(step > 0.0) || !(b >= a)) throw std::invalid_argument("grid a:b:step needs step > 0 and b >= a");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (n > 1000000) throw std::invalid_argument("grid has more than 1e6 points");
    for (std::size_t i = 0; i < n; ++i) g.push_back(a + static_cast<double>(i) * step);
  } else {
    g = numbers(text);
  }
  for (double v : g)
    if (!std::isfinite(v)) throw std::invalid_argument("grid values must be finite");
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::vector<double> parse_grid_db(const std::string& text) {
  auto g = parse_grid(text);
  for (double& v : g) v = std::pow(10.0, v / 10.0);
  return g;
}

InputLaw parse_input(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "binary") {
    if (!rest.empty()) throw std::invalid_argument("binary takes no parameters");
    return InputLaw::binary();
  }
  if (kind == "gaussian") {
    if (rest.empty()) return InputLaw::gaussian(0.0, 1.0);
    const auto v = numbers(rest);
    if (v.size() != 2) throw std::invalid_argument("gaussian:mean,variance");
    return InputLaw::gaussian(v[0], v[1]);
  }
  if (kind == "atoms") {
    const auto parts = split(rest, '/');
    if (parts.empty() || parts.size() > 2) throw std::invalid_argument("atoms:v1,v2,...[/p1,p2,...]");
    const auto values = numbers(parts[0]);
    std::vector<double> probs;
    if (parts.size() == 2) {
      probs = numbers(parts[1]);
    } else {
      probs.assign(values.size(), 1.0 / static_cast<double>(values.size()));
    }
    return InputLaw::atoms(values, probs);
  }
  if (kind == "mixture") {
    const auto v = numbers(rest);
    if (v.empty() || v.size() % 3 != 0) throw std::invalid_argument("mixture:w,mean,var[,w,mean,var...]");
    std::vector<MixtureComponent> c;
    for (std::size_t i = 0; i < v.size(); i += 3) c.push_back({v[i], v[i + 1], v[i + 2]});
    return InputLaw::mixture(c);
  }
  if (kind == "uniform") {
    const auto v = numbers(rest);
    if (v.size() != 2 && v.size() != 3) throw std::invalid_argument("uniform:lo,hi[,points]");
    const double pts = v.size() == 3 ? v[2] : 201.0;
    if (!(pts >= 2.0) || pts != std::floor(pts)) throw std::invalid_argument("uniform: points must be an integer >= 2");
    return InputLaw::uniform_gridded(v[0], v[1], static_cast<std::size_t>(pts));
  }
  throw std::invalid_argument("unknown input '" + text + "' (binary, gaussian, atoms, mixture, uniform)");
}

std::map<std::string, double> parse_params(const std::string& text, const std::vector<std::string>& allowed) {
  std::map<std::string, double> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument("unknown parameter '" + key + "'");
    out[key] = to_double(item.substr(eq + 1));
  }
  return out;
}

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

std::size_t to_count(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) throw std::invalid_argument(std::string(what) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

// Everything the subcommands can be given; each binds the subset it uses.
struct Options {
  std::string target;  // quantity, suite, model or manifest path
  std::string input;
  std::string telegraph;
  std::string ou;
  std::string ar;
  std::string snr;
  std::string snr_db;
  std::string a_values;
  std::string n_values;
  std::string xi_values;
  std::string u_values;
  std::string tail;
  std::string out;
  double nu = 1.0;
  double delta = 1e-4;
  double tol = -1.0;  // negative: suite default
  double adaptive_tol = 1e-10;
  double snr_max = -1.0;
  double T = -1.0;
  double dt = -1.0;
  double burn_in = -1.0;
  std::size_t paths = 100000;
  std::uint64_t seed = 20050401;
  unsigned threads = 0;
  bool bits = false;
  bool dump = false;
};

std::vector<double> snr_values(const Options& o, std::vector<double> fallback) {
  if (!o.snr.empty()) return parse_grid(o.snr);
  if (!o.snr_db.empty()) return parse_grid_db(o.snr_db);
  if (fallback.empty()) throw std::invalid_argument("--snr or --snr-db is required");
  return fallback;
}

double single_snr(const Options& o, double fallback) {
  const auto g = snr_values(o, {fallback});
  if (g.size() != 1) throw std::invalid_argument("a single snr value is expected");
  return g.front();
}

double tol_or(const Options& o, double fallback) { return o.tol > 0.0 ? o.tol : fallback; }

QuadratureSpec quad_of(const Options& o) {
  QuadratureSpec q;
  q.adaptive_tol = o.adaptive_tol;
  q.validate();
  return q;
}

McConfig mc_of(const Options& o) {
  McConfig mc;
  mc.seed = o.seed;
  mc.paths = o.paths;
  mc.threads = o.threads;
  if (o.T > 0.0) mc.T = o.T;
  if (o.dt > 0.0) mc.dt = o.dt;
  mc.burn_in = o.burn_in;
  return mc;
}

// A step that divides the horizon and respects the filter precondition.
double grid_step(const TelegraphModel& m, double T) {
  return T / std::ceil(T / default_filter_step(m) - 1e-9);
}

struct Artifact {
  std::string text;
  bool passed = true;
  std::string label;  // command name for the manifest
  json extra = json::object();
};

// ---------- curve ----------

Artifact cmd_curve(const Options& o) {
  static const std::vector<std::string> quantities{"mi", "mmse", "cmmse", "pmmse", "fisher"};
  if (std::find(quantities.begin(), quantities.end(), o.target) == quantities.end())
    throw std::invalid_argument("unknown quantity '" + o.target + "'");
  const int sources = !o.input.empty() + !o.telegraph.empty() + !o.ou.empty() + !o.ar.empty();
  if (sources > 1) throw std::invalid_argument("give exactly one of --input, --telegraph, --ou, --ar");
  const auto grid = snr_values(o, {});
  const QuadratureSpec q = quad_of(o);
  const std::string& what = o.target;

  std::function<double(double)> f;
  std::string method;
  double tol = q.adaptive_tol;
  auto unsupported = [&](const std::string& src) {
    return std::invalid_argument("quantity '" + what + "' is not available for " + src);
  };

  if (!o.telegraph.empty()) {
    const double nu = param(parse_params(o.telegraph, {"nu"}), "nu", 1.0);
    TelegraphModel{nu, 0.0}.validate();
    if (what == "cmmse") {
      f = [nu](double s) { return telegraph_cmmse({nu, s}); };
    } else if (what == "mmse") {
      f = [nu](double s) { return telegraph_mmse({nu, s}); };
      tol = 1e-12;
    } else if (what == "mi") {
      f = [nu](double s) { return 0.5 * s * telegraph_cmmse({nu, s}); };
    } else {
      throw unsupported("--telegraph");
    }
    method = "telegraph_integral";
    if (what != "mmse") tol = 1e-14;
  } else if (!o.ou.empty()) {
    const auto p = parse_params(o.ou, {"variance", "beta"});
    const SpectrumModel sm{param(p, "variance", 1.0), param(p, "beta", 1.0)};
    sm.validate();
    if (what == "mi") {
      f = [sm](double s) { return spectral_quantities(sm, s).mi_rate; };
    } else if (what == "mmse") {
      f = [sm](double s) { return spectral_quantities(sm, s).mmse; };
    } else if (what == "cmmse") {
      f = [sm](double s) { return spectral_quantities(sm, s).cmmse; };
    } else {
      throw unsupported("--ou");
    }
    method = "spectral_quadrature";
    tol = 1e-14;
  } else if (!o.ar.empty()) {
    const auto p = parse_params(o.ar, {"a", "n"});
    const ARProcess ar{param(p, "a", 0.5), to_count(param(p, "n", 10.0), "n")};
    ar.validate();
    auto avg = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    if (what == "mi") {
      f = [ar](double s) { return block_mi(ar, s) / static_cast<double>(ar.n); };
      method = "cholesky";
    } else if (what == "fisher") {
      throw unsupported("--ar");
    } else {
      f = [ar, avg, what](double s) {
        const auto t = kalman_triple(ar, s);
        return avg(what == "mmse" ? t.mmse : what == "cmmse" ? t.cmmse : t.pmmse);
      };
      method = "kalman";
    }
    tol = 0.0;
  } else {
    const InputLaw law = parse_input(o.input.empty() ? "gaussian" : o.input);
    if (what == "mi") {
      f = [law, q](double s) { return mutual_information(ScalarChannel(law, s, q)); };
    } else if (what == "mmse") {
      f = [law, q](double s) { return mmse(ScalarChannel(law, s, q)); };
    } else if (what == "fisher") {
      f = [law, q](double s) { return fisher_information(ScalarChannel(law, s, q)); };
    } else {
      throw unsupported("a memoryless --input (use --telegraph, --ou or --ar)");
    }
    method = "quadrature";
  }
  for (double s : grid)
    if (s < 0.0) throw std::invalid_argument("snr must be >= 0");

  const unsigned threads = o.threads > 0 ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  auto values = parallel_map<double>(grid.size(), threads, [&](std::size_t i) { return f(grid[i]); });
  const double scale = (o.bits && what == "mi") ? 1.0 / std::numbers::ln2 : 1.0;

  std::string csv = "snr,value,method,tol\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv += format_number(grid[i]) + "," + format_number(values[i] * scale) + "," + method + "," + format_number(tol) + "\n";
  Artifact a;
  a.text = std::move(csv);
  a.label = "curve " + what;
  a.extra["units"] = what == "mi" ? (o.bits ? "bits" : "nats") : "";
  a.extra["tolerances"] = json{{"adaptive_tol", q.adaptive_tol}, {"reported_tol", tol}};
  return a;
}

// ---------- verify ----------

std::vector<std::size_t> counts(const std::string& text, std::vector<std::size_t> fallback) {
  if (text.empty()) return fallback;
  std::vector<std::size_t> v;
  for (double x : numbers(text)) v.push_back(to_count(x, "n"));
  return v;
}

VectorChannelModel binary_vector_model(double snr) {
  AtomSet atoms;
  atoms.points = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  atoms.probs = {0.5, 0.5};
  return VectorChannelModel::common(Eigen::MatrixXd::Identity(1, 1), atoms, snr);
}

VectorChannelModel gaussian_vector_model(double snr) {
  Eigen::MatrixXd h(2, 2), cov(2, 2);
  h << 1.0, 0.4, -0.3, 0.8;
  cov << 1.0, 0.3, 0.3, 0.5;
  return VectorChannelModel::common(h, GaussianVec{Eigen::VectorXd::Zero(2), cov}, snr);
}

VectorChannelModel qpsk_model(double snr) {
  AtomSet atoms;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) atoms.points.push_back((Eigen::VectorXd(2) << a, b).finished());
  atoms.probs.assign(4, 0.25);
  Eigen::MatrixXd h(2, 2);
  h << 1.0, 0.5, 0.2, 1.0;
  return VectorChannelModel::common(h, atoms, snr);
}

Report suite_immse(const Options& o) {
  const InputLaw law = parse_input(o.input.empty() ? "binary" : o.input);
  const auto grid = snr_values(o, {0.1, 0.5, 1.0, 2.0, 5.0, 10.0});
  const QuadratureSpec q = quad_of(o);
  Report r = verify_immse(law, grid, o.delta, tol_or(o, 1e-6), q);
  r.append(verify_integral_form(law, 4.0, 400, tol_or(o, 1e-6), 1e-5, q));
  r.suite = "immse";
  return r;
}

Report suite_duncan(const Options& o) {
  const auto grid = snr_values(o, {0.5, 1.0, 3.16, 10.0});
  Report r;
  r.suite = "duncan";
  for (double s : grid) r.append(duncan_check({o.nu, s}, tol_or(o, 1e-4)));
  r.append(ou_causal_average_check({1.0, 1.0}, grid, 1e-10), "ou: ");
  return r;
}

Report suite_thm7(const Options& o) {
  const auto grid = snr_values(o, {0.5, 1.0, 3.16, 10.0, 31.6});
  Report r = verify_thm7(o.nu, grid, tol_or(o, 1e-4));
  const SpectrumModel ou{1.0, 1.0};
  r.append(ou_causal_average_check(ou, grid, 1e-10), "ou: ");
  const double high[] = {1e4};
  r.append(spectral_ratio_check(ou, high, 0.02, 1e-3, 0.005), "ou: ");
  r.suite = "thm7";
  return r;
}

Report suite_debruijn(const Options& o) {
  const InputLaw law = parse_input(o.input.empty() ? "binary" : o.input);
  const auto grid = snr_values(o, {2.0});
  const QuadratureSpec q = quad_of(o);
  McConfig mc = mc_of(o);
  Report r;
  r.suite = "debruijn";
  for (double s : grid) {
    const ScalarChannel ch(law, s, q);
    r.expect_close("Fisher 1 - snr mmse vs E score^2 snr=" + std::to_string(s), fisher_information(ch),
                   fisher_information_direct(ch), tol_or(o, 1e-8));
    r.append(de_bruijn_check(gaussian_vector_model(s), o.delta, mc, 1e-7), "gaussian 2x2: ");
    r.append(de_bruijn_check(binary_vector_model(s), o.delta, mc, 1e-7), "binary: ");
  }
  return r;
}

Report suite_corollary3(const Options& o) {
  const auto a = o.a_values.empty() ? std::vector<double>{0.0, 0.5, 0.9} : parse_grid(o.a_values);
  const auto grid = snr_values(o, {0.5, 1.0, 2.0});
  const auto n = counts(o.n_values, {10, 50});
  Report r;
  r.suite = "corollary3";
  for (double av : a)
    for (double s : grid)
      for (std::size_t k : n) r.append(verify_corollary3({av, k}, s, o.delta, tol_or(o, 1e-6)));
  return r;
}

Report suite_thm9(const Options& o) {
  const auto a = o.a_values.empty() ? std::vector<double>{0.0, 0.5, 0.9} : parse_grid(o.a_values);
  const auto grid = snr_values(o, {0.5, 1.0, 2.0});
  const auto n = counts(o.n_values, {10, 50});
  Report r;
  r.suite = "thm9";
  for (double av : a)
    for (double s : grid)
      for (std::size_t k : n) {
        const ARProcess p{av, k};
        r.append(verify_thm9(p, s));
        const auto t = kalman_triple(p, s);
        double sc = 0.0, sp = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          sc += t.cmmse[i];
          sp += t.pmmse[i];
        }
        const double mi = block_mi(p, s);
        r.note("a=" + format_number(av) + " n=" + std::to_string(k) + " snr=" + format_number(s) +
               ": lower slack " + format_number(mi - 0.5 * s * sc) + ", upper slack " + format_number(0.5 * s * sp - mi));
      }
  return r;
}

Report suite_lemmas(const Options& o) {
  const InputLaw law = parse_input(o.input.empty() ? "binary" : o.input);
  const QuadratureSpec q = quad_of(o);
  Report r;
  r.suite = "lemmas";
  const double deltas[] = {1e-4, 1e-3, 1e-2};
  r.append(lemma1_low_snr(law, deltas, q));
  r.append(incremental_channel_check(law, incremental_decompose(1.0, 1.0), std::min<std::size_t>(o.paths, 100000),
                                     o.seed));
  const ScalarChannel ch(law, 2.0, q);
  for (double y : {-2.0, 0.0, 1.5}) {
    const double h = 1e-4;
    const double fd = (std::log(q_moment(ch, y + h, 0)) - std::log(q_moment(ch, y - h, 0))) / (2.0 * h);
    r.expect_close("score vs d/dy log q0 y=" + format_number(y), score(ch, y), fd, 1e-7);
  }
  const Eigen::Vector2d y(0.3, -0.7);
  r.append(likelihood_lemmas_check(gaussian_vector_model(1.0), y), "gaussian 2x2: ");
  r.append(likelihood_lemmas_check(qpsk_model(1.0), y), "4 atoms: ");
  if (law.is_discrete()) {
    const double g[] = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    r.append(discrete_mi_limit_check(law, g, 1e-6, q));
  }
  const double g2[] = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
  r.append(output_divergence_monotonicity(InputLaw::mixture({{0.5, -1.0, 0.25}, {0.5, 1.0, 0.25}}),
                                          InputLaw::gaussian(0.0, 1.25), g2, q));
  return r;
}

TailPolicy tail_or(const Options& o, TailPolicy fallback) {
  if (o.snr_max > 0.0) fallback.snr_max = o.snr_max;
  if (!o.tail.empty()) fallback.tail_estimator = parse_tail_estimator(o.tail);
  fallback.validate();
  return fallback;
}

Report suite_representations(const Options& o) {
  const QuadratureSpec q = quad_of(o);
  Report r;
  r.suite = "representations";
  const auto four = InputLaw::atoms({-3.0, -1.0, 1.0, 3.0}, {0.25, 0.25, 0.25, 0.25});
  const TailPolicy atoms_tail = tail_or(o, {80.0, TailEstimator::exponential_fit});
  const double h_id = entropy_via_mmse(four, Mapping::identity(), atoms_tail, q).value;
  const double h_aff = entropy_via_mmse(four, Mapping::affine(2.0, 1.0), atoms_tail, q).value;
  r.expect_close("entropy via mmse vs ln 4 (4 atoms)", h_id, std::log(4.0), 1e-3);
  r.expect_close("entropy via mmse, identity vs affine map", h_id, h_aff, 2e-3);
  const TailPolicy density_tail = tail_or(o, {1e4, TailEstimator::gaussian_tail});
  r.expect_close("non-Gaussianness of N(0,1)", nongaussianness(InputLaw::gaussian(0.0, 1.0), density_tail, q).value,
                 0.0, 1e-9);
  const auto mix = InputLaw::mixture({{0.5, -1.0, 0.25}, {0.5, 1.0, 0.25}});
  const auto d = nongaussianness(mix, density_tail, q);
  r.expect_close("non-Gaussianness of mixture vs direct KL", d.value, divergence_from_gaussian(mix), 1e-4);
  double worst = 0.0;
  for (double v : d.integrand) worst = std::min(worst, v);
  r.expect_less_equal("non-Gaussianness integrand >= 0 (min over nodes)", -worst, 0.0, 1e-12);
  const JointAtoms same{{-1.0, 1.0}, {-1.0, 1.0}, {0.5, 0.5}};
  r.expect_close("I(X;Z) via mmse difference, Z = X", mi_via_mmse_difference(same, atoms_tail, q).value,
                 std::log(2.0), 2e-3);
  const TailPolicy epi_tail = tail_or(o, {1e3, TailEstimator::gaussian_tail});
  for (std::uint64_t i = 0; i < 5; ++i)
    r.append(gamma_epi_check(random_mixture(o.seed, 2 * i), random_mixture(o.seed, 2 * i + 1), epi_tail, q),
             "pair " + std::to_string(i) + ": ");
  return r;
}

Report suite_appendix_e(const Options& o) {
  const auto xi = o.xi_values.empty() ? std::vector<double>{-8.0, -2.0, -0.5} : parse_grid(o.xi_values);
  Report r;
  r.suite = "appendixE";
  for (double x : xi) {
    if (!(x < 0.0)) throw std::invalid_argument("xi must be < 0");
    r.append(f_recurrence_check(x, tol_or(o, 1e-8)), "xi=" + format_number(x) + ": ");
  }
  if (o.xi_values.empty() || !o.snr.empty() || !o.snr_db.empty())
    r.append(telegraph_differential_check(o.nu, snr_values(o, {0.5, 1.0, 3.16, 10.0, 31.6}), 1e-4));
  return r;
}

Report suite_wonham(const Options& o) {
  const TelegraphModel m{o.nu, single_snr(o, std::pow(10.0, 0.5))};
  m.validate();
  McConfig mc = mc_of(o);
  if (!(o.dt > 0.0)) mc.dt = grid_step(m, mc.T);
  return wonham_check(m, mc);
}

Report suite_spectral(const Options& o) {
  const SpectrumModel s{1.0, 1.0};
  const auto grid = snr_values(o, {0.0, 0.1, 1.0, 10.0, 100.0});
  Report r = spectral_check(s, grid, tol_or(o, 1e-8));
  const double high[] = {1e4};
  r.append(spectral_ratio_check(s, high, 0.02, 1e-3, 0.005));
  r.suite = "spectral";
  return r;
}

Artifact cmd_verify(const Options& o) {
  static const std::map<std::string, Report (*)(const Options&)> suites{
      {"immse", suite_immse},         {"duncan", suite_duncan},
      {"thm7", suite_thm7},           {"debruijn", suite_debruijn},
      {"corollary3", suite_corollary3}, {"thm9", suite_thm9},
      {"lemmas", suite_lemmas},       {"representations", suite_representations},
      {"appendixE", suite_appendix_e}, {"wonham", suite_wonham},
      {"spectral", suite_spectral}};
  const auto it = suites.find(o.target);
  if (it == suites.end()) throw std::invalid_argument("unknown suite '" + o.target + "'");
  const Report r = it->second(o);
  Artifact a;
  a.text = to_json(r).dump(2) + "\n";
  a.passed = r.passed();
  a.label = "verify " + o.target;
  a.extra["tolerances"] = json{{"adaptive_tol", o.adaptive_tol}, {"check_tol", o.tol > 0.0 ? json(o.tol) : json("suite default")}};
  return a;
}

// ---------- simulate ----------

json estimate(const McEstimate& e) { return json{{"mse", e.value}, {"se", e.se}}; }

Artifact cmd_simulate(const Options& o) {
  Artifact a;
  a.label = "simulate " + o.target;
  if (o.target == "telegraph") {
    const TelegraphModel m{o.nu, single_snr(o, std::pow(10.0, 0.5))};
    m.validate();
    const double T = o.T > 0.0 ? o.T : 10.0;
    const double dt = o.dt > 0.0 ? o.dt : grid_step(m, T);
    check_filter_step(m, dt);
    a.extra["resolved"] = json{{"T", T}, {"dt", dt}};
    a.extra["tolerances"] = json{{"se_multiple", 3.0}};
    if (o.dump) {
      if (o.paths != 1) throw std::invalid_argument("--dump writes a single path; use --paths 1");
      const SamplePath p = simulate_telegraph(m, T, dt, o.seed);
      const auto f = wonham_filter(p, m);
      const auto b = anticausal_filter(p, m);
      const auto s = yao_smoother(f, b);
      std::string csv = "t,x,dy,xhat_causal,xhat_smooth\n";
      for (std::size_t k = 0; k < p.x.size(); ++k)
        csv += format_number(static_cast<double>(k) * dt) + "," + format_number(p.x[k]) + "," + format_number(p.dy[k]) +
               "," + format_number(f[k]) + "," + format_number(s[k]) + "\n";
      a.text = std::move(csv);
      return a;
    }
    McConfig mc = mc_of(o);
    mc.T = T;
    mc.dt = dt;
    const double burn = o.burn_in >= 0.0 ? o.burn_in : 10.0 / m.nu;
    mc.burn_in = dt * std::ceil(burn / dt - 1e-9);
    a.extra["resolved"]["burn_in"] = mc.burn_in;
    const auto e = wonham_ensemble(m, mc);
    const Report r = wonham_report(m, mc, e);
    json j;
    j["model"] = "telegraph";
    j["nu"] = m.nu;
    j["snr"] = m.snr;
    j["paths"] = mc.paths;
    j["T"] = mc.T;
    j["dt"] = mc.dt;
    j["burn_in"] = e.burn_in;
    j["seed"] = mc.seed;
    j["causal"] = estimate(e.causal);
    j["smoothed"] = estimate(e.smoothed);
    j["anticausal"] = estimate(e.anticausal);
    j["closed_form"] = json{{"cmmse", telegraph_cmmse(m)}, {"mmse", telegraph_mmse(m)}};
    j["report"] = to_json(r);
    a.text = j.dump(2) + "\n";
    a.passed = r.passed();
    return a;
  }
  if (o.target == "constant-input") {
    if (o.dump) throw std::invalid_argument("--dump is only available for the telegraph model");
    const InputLaw law = parse_input(o.input.empty() ? "binary" : o.input);
    const double snr = single_snr(o, 2.0);
    McConfig mc = mc_of(o);
    mc.T = o.T > 0.0 ? o.T : 1.0;
    if (!(o.dt > 0.0)) mc.dt = 1e-3;
    std::vector<double> u = o.u_values.empty() ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0} : parse_grid(o.u_values);
    if (o.u_values.empty())
      for (double& v : u) v *= mc.T;
    a.extra["resolved"] = json{{"T", mc.T}, {"dt", mc.dt}};
    a.extra["tolerances"] = json{{"se_multiple", 3.0}};
    const Report r = time_snr_transform_check(law, snr, mc.T, mc, u);
    json j;
    j["model"] = "constant-input";
    j["input"] = law.describe();
    j["snr"] = snr;
    j["paths"] = mc.paths;
    j["T"] = mc.T;
    j["dt"] = mc.dt;
    j["seed"] = mc.seed;
    j["report"] = to_json(r);
    a.text = j.dump(2) + "\n";
    a.passed = r.passed();
    return a;
  }
  throw std::invalid_argument("unknown model '" + o.target + "' (telegraph, constant-input)");
}

// ---------- artifacts, manifests, replay ----------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::invalid_argument("cannot write " + path);
  f << text;
  if (!f) throw std::invalid_argument("write failed: " + path);
}

json parameters(const CLI::App* sub) {
  json p = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help") continue;
    if (opt->get_expected_min() == 0) {
      p[name] = opt->count() > 0;
      continue;
    }
    const auto& res = opt->results();
    if (res.empty()) {
      p[name] = opt->get_default_str();
    } else {
      std::string v;
      for (std::size_t i = 0; i < res.size(); ++i) v += (i ? " " : "") + res[i];
      p[name] = v;
    }
  }
  return p;
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

int replay(const std::string& path, std::ostream& out, std::ostream& err) {
  const json m = json::parse(read_file(path));
  if (!m.contains("argv") || !m.contains("output")) throw std::invalid_argument(path + " is not a run manifest");
  std::vector<std::string> args = m["argv"].get<std::vector<std::string>>();
  const std::string original = m["output"].get<std::string>();
  const std::string fresh = original + ".replay";
  std::vector<std::string> rerun;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& s = args[i];
    if (s == "--out" || s == "--threads") {
      ++i;
      continue;
    }
    if (s.rfind("--out=", 0) == 0 || s.rfind("--threads=", 0) == 0) continue;
    rerun.push_back(s);
  }
  rerun.insert(rerun.end(), {"--out", fresh, "--threads", "1"});
  std::ostringstream sink;
  const int code = run(rerun, sink, err);
  if (!std::filesystem::exists(fresh)) {
    err << "replay: rerun produced no artifact (exit " << code << ")\n";
    return code == kPass ? kVerificationFailure : code;
  }
  const bool same = read_file(fresh) == read_file(original);
  const bool same_code = !m.contains("exit_code") || m["exit_code"].get<int>() == code;
  std::filesystem::remove(fresh);
  std::filesystem::remove(manifest_path(fresh));
  json j;
  j["manifest"] = path;
  j["artifact"] = original;
  j["identical"] = same;
  j["exit_code"] = code;
  j["recorded_exit_code"] = m.value("exit_code", code);
  out << j.dump(2) << "\n";
  return same && same_code ? kPass : kVerificationFailure;
}

void add_common(CLI::App* c, Options& o) {
  c->add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
  c->add_option("--out", o.out, "Artifact path; a .manifest.json is written beside it");
}

void add_snr(CLI::App* c, Options& o) {
  auto* lin = c->add_option("--snr", o.snr, "Linear snr: a:b:step, a,b,c or a single value");
  auto* db = c->add_option("--snr-db", o.snr_db, "snr in dB, same forms");
  lin->excludes(db);
}

void add_mc(CLI::App* c, Options& o) {
  c->add_option("--paths", o.paths, "Monte Carlo paths or draws")->capture_default_str();
  c->add_option("--seed", o.seed, "Base seed")->capture_default_str();
  c->add_option("--T", o.T, "Horizon (model default when omitted)");
  c->add_option("--dt", o.dt, "Time step (model default when omitted)");
  c->add_option("--burn-in", o.burn_in, "Burn-in before error averaging (default 10/nu)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"immse: mutual information and MMSE numerics for Gaussian channels"};
  app.require_subcommand(1);
  Options o;

  auto* curve = app.add_subcommand("curve", "Tabulate a quantity against snr as CSV");
  curve->add_option("quantity", o.target, "mi | mmse | cmmse | pmmse | fisher")->required();
  curve->add_option("--input", o.input, "Memoryless input law (default gaussian)");
  curve->add_option("--telegraph", o.telegraph, "Random telegraph input, e.g. nu=1");
  curve->add_option("--ou", o.ou, "Gauss-Markov input, e.g. variance=1,beta=1");
  curve->add_option("--ar", o.ar, "Discrete-time AR(1) input, e.g. a=0.9,n=50");
  add_snr(curve, o);
  curve->add_option("--adaptive-tol", o.adaptive_tol, "Absolute quadrature target")->capture_default_str();
  curve->add_flag("--bits", o.bits, "Report information in bits");
  add_common(curve, o);

  auto* verify = app.add_subcommand("verify", "Run a verification suite and write a JSON report");
  verify->add_option("suite", o.target,
                     "immse | duncan | thm7 | debruijn | corollary3 | thm9 | lemmas | representations | appendixE | "
                     "wonham | spectral")
      ->required();
  verify->add_option("--input", o.input, "Input law (default binary)");
  add_snr(verify, o);
  verify->add_option("--nu", o.nu, "Telegraph transition rate")->capture_default_str();
  verify->add_option("--a", o.a_values, "AR(1) coefficients");
  verify->add_option("--n", o.n_values, "AR(1) block lengths");
  verify->add_option("--xi", o.xi_values, "xi values for the f(i,j) recurrences");
  verify->add_option("--delta", o.delta, "Finite-difference scale")->capture_default_str();
  verify->add_option("--tol", o.tol, "Override the suite tolerance");
  verify->add_option("--adaptive-tol", o.adaptive_tol, "Absolute quadrature target")->capture_default_str();
  verify->add_option("--snr-max", o.snr_max, "Truncation of the snr integrals");
  verify->add_option("--tail", o.tail, "none | gaussian_tail | exponential_fit");
  add_mc(verify, o);
  add_common(verify, o);

  auto* simulate = app.add_subcommand("simulate", "Simulate a continuous-time model");
  simulate->add_option("model", o.target, "telegraph | constant-input")->required();
  simulate->add_option("--nu", o.nu, "Telegraph transition rate")->capture_default_str();
  simulate->add_option("--input", o.input, "Law of the constant input (default binary)");
  add_snr(simulate, o);
  simulate->add_option("--u", o.u_values, "Times at which the constant-input error is checked");
  simulate->add_flag("--dump", o.dump, "Write the path as CSV (t, x, dy, xhat_causal, xhat_smooth)");
  add_mc(simulate, o);
  add_common(simulate, o);

  std::string manifest;
  auto* rep = app.add_subcommand("replay", "Re-run a manifest single-threaded and compare artifacts");
  rep->add_option("manifest", manifest, "Path of a .manifest.json")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (rep->parsed()) return replay(manifest, out, err);
    const auto t0 = std::chrono::steady_clock::now();
    Artifact a;
    CLI::App* sub = nullptr;
    if (curve->parsed()) {
      sub = curve;
      a = cmd_curve(o);
    } else if (verify->parsed()) {
      sub = verify;
      a = cmd_verify(o);
    } else {
      sub = simulate;
      a = cmd_simulate(o);
    }
    const int code = a.passed ? kPass : kVerificationFailure;
    if (o.out.empty()) {
      out << a.text;
    } else {
      write_file(o.out, a.text);
      json m;
      m["command"] = a.label;
      m["argv"] = args;
      m["parameters"] = parameters(sub);
      m["seeds"] = json::array({o.seed});
      m["library_version"] = IMMSE_VERSION;
      for (auto& [k, v] : a.extra.items()) m[k] = v;
      m["output"] = o.out;
      m["exit_code"] = code;
      m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_file(manifest_path(o.out), m.dump(2) + "\n");
    }
    if (!a.passed) err << a.label << ": verification failed\n";
    return code;
  } catch (const NonConvergence& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const TailNotResolved& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const DegenerateCovariance& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNonConvergence;
  }
}

}  // namespace immse::cli
