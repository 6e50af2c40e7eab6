#pragma once

// Experiment runner behind the `qsc` command line tool. Each command produces
// an ExperimentReport with fixed columns; render() turns it into CSV or JSON.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qsc/ball_geometry.hpp"
#include "qsc/covering.hpp"
#include "qsc/encoding.hpp"
#include "qsc/serialize.hpp"
#include "qsc/state.hpp"

namespace qsc {

enum class Command { volume, fig3, covering_build, covering_verify, encode, minimax, octahedron, halving, bounds };
enum class Format { csv, json };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::volume: return "volume";
    case Command::fig3: return "fig3";
    case Command::covering_build: return "covering-build";
    case Command::covering_verify: return "covering-verify";
    case Command::encode: return "encode";
    case Command::minimax: return "minimax";
    case Command::octahedron: return "octahedron";
    case Command::halving: return "halving";
    case Command::bounds: return "bounds";
  }
  return "?";
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (Command c : {Command::volume, Command::fig3, Command::covering_build, Command::covering_verify,
                    Command::encode, Command::minimax, Command::octahedron, Command::halving, Command::bounds}) {
    if (s == command_name(c)) return c;
  }
  return std::nullopt;
}

/// Unset optionals take per-command defaults (see default_dim & co.).
struct ExperimentConfig {
  Command command = Command::volume;
  std::optional<std::size_t> dim;
  std::optional<double> epsilon;
  std::optional<std::size_t> samples;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string output_path;  // empty: stdout
  Format format = Format::csv;

  std::optional<double> p0;                 // volume: mixed center diag(p0, 1-p0, 0, ...)
  std::optional<double> x;                  // covering-build, halving
  std::optional<std::size_t> fail_streak;   // covering-build, halving
  std::string book_path;                    // covering-verify, encode, minimax
  std::string builtin_book;                 // encode, minimax: octahedron | z-pair | zero
  std::string book_out;                     // covering-build, halving: write the code book here
  std::string target_path;                  // encode: single target state file
  std::optional<std::size_t> restarts;      // minimax
};

/// --seed, else the QSC_SEED environment variable, else 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("QSC_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("QSC_SEED is not an unsigned integer");
    return v;
  }
  return 0;
}

using Cell = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

struct ExperimentReport {
  std::string command;
  json config;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::optional<bool> pass;  // empty when no criterion applies
  double wall_time_seconds = 0.0;
  json extra;                // command-specific payload (JSON output only)
};

/// 0 pass or no criterion, 1 criterion failed.
inline int exit_code(const ExperimentReport& r) { return r.pass.value_or(true) ? 0 : 1; }

namespace detail {

inline std::size_t default_dim(Command c) { return c == Command::fig3 ? 4 : 2; }

inline double default_epsilon(Command c) {
  switch (c) {
    case Command::halving: return 0.25;
    default: return 0.5;
  }
}

inline std::size_t default_samples(Command c) {
  switch (c) {
    case Command::volume:
    case Command::fig3: return 1'000'000;
    case Command::covering_verify: return 100'000;
    case Command::minimax: return 2'000;
    default: return 10'000;
  }
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return v; }
  };
  return std::visit(V{}, c);
}

inline json cell_json(const Cell& c) {
  struct V {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(std::int64_t v) const { return v; }
    json operator()(double v) const { return std::isfinite(v) ? json(v) : json(format_double(v)); }
    json operator()(bool v) const { return v; }
    json operator()(const std::string& v) const { return v; }
  };
  return std::visit(V{}, c);
}

inline Cell n(std::size_t v) { return static_cast<std::int64_t>(v); }

inline Covering load_book(const ExperimentConfig& cfg) {
  if (!cfg.builtin_book.empty()) {
    if (cfg.builtin_book == "octahedron") return octahedron_book();
    if (cfg.builtin_book == "z-pair") {
      return Covering::explicit_book(2, 1.0, {PureState::basis(2, 0), PureState::basis(2, 1)});
    }
    if (cfg.builtin_book == "zero") return Covering::explicit_book(2, 1.0, {PureState::basis(2, 0)});
    throw std::invalid_argument("unknown builtin book '" + cfg.builtin_book + "' (octahedron, z-pair, zero)");
  }
  if (cfg.book_path.empty()) throw std::invalid_argument("this command needs --book or --builtin");
  return covering_from_json(read_json_file(cfg.book_path));
}

inline json config_json(const ExperimentConfig& c, std::size_t dim, double eps, std::size_t samples) {
  json j{{"command", command_name(c.command)}, {"dim", dim},       {"epsilon", eps},
         {"samples", samples},                 {"seed", c.seed},   {"workers", c.workers}};
  if (c.p0) j["p0"] = *c.p0;
  if (c.x) j["x"] = *c.x;
  if (c.fail_streak) j["fail_streak"] = *c.fail_streak;
  if (!c.book_path.empty()) j["book"] = c.book_path;
  if (!c.builtin_book.empty()) j["builtin"] = c.builtin_book;
  if (!c.target_path.empty()) j["target"] = c.target_path;
  if (c.restarts) j["restarts"] = *c.restarts;
  return j;
}

inline void run_volume(const ExperimentConfig& c, std::size_t d, double eps, std::size_t ns, ExperimentReport& r) {
  SeededSampler sampler(c.seed);
  std::optional<double> reference;
  bool upper_only = false;
  DensityMatrix center = DensityMatrix::from_pure(PureState::basis(d, 0));
  if (c.p0) {
    if (d < 2) throw std::invalid_argument("--p0 needs --dim >= 2");
    Eigen::VectorXd probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    probs(0) = *c.p0;
    probs(1) = 1.0 - *c.p0;
    center = DensityMatrix::diagonal(probs);
    if (d >= 4 && eps <= 0.5 && *c.p0 >= 0.5) {
      reference = g_integral(d, eps, *c.p0);
      upper_only = true;
    }
  } else {
    reference = ball_volume_exact(eps, d);
  }
  const VolumeEstimate v = ball_volume_mc(BallSpec(center, eps), ns, sampler, c.workers);
  r.columns = {"dim", "epsilon", "p0", "estimate", "std_error", "num_samples", "seed", "reference", "pass"};
  Cell pass_cell;
  if (reference) {
    const double slack = 3.0 * v.std_error + 1e-12;
    const bool ok = upper_only ? v.point_estimate <= *reference + slack : std::abs(v.point_estimate - *reference) <= slack;
    r.pass = ok;
    pass_cell = ok;
  }
  r.rows.push_back({n(d), eps, c.p0 ? Cell(*c.p0) : Cell(), v.point_estimate, v.std_error, n(ns),
                    static_cast<std::int64_t>(c.seed), reference ? Cell(*reference) : Cell(), pass_cell});
}

inline void run_fig3(const ExperimentConfig& c, std::size_t d, double eps, std::size_t ns, ExperimentReport& r) {
  if (d < 4) throw std::domain_error("fig3 needs --dim >= 4");
  SeededSampler sampler(c.seed);
  r.columns = {"dim", "epsilon", "p0", "estimate", "std_error", "num_samples", "seed", "g4_bound", "g_integral", "pass"};
  bool all = true;
  for (double p0 : {0.55, 0.65, 0.75, 0.85, 0.95}) {
    Eigen::VectorXd probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    probs(0) = p0;
    probs(1) = 1.0 - p0;
    const VolumeEstimate v = ball_volume_mc(BallSpec(DensityMatrix::diagonal(probs), eps), ns, sampler, c.workers);
    const double gi = g_integral(d, eps, p0);
    Cell g4;
    if (d == 4 && p0 > 1.0 - eps) g4 = g4_closed_form(eps, p0);
    const bool ok = v.point_estimate <= gi + 3.0 * v.std_error;
    all = all && ok;
    r.rows.push_back({n(d), eps, p0, v.point_estimate, v.std_error, n(ns), static_cast<std::int64_t>(c.seed), g4, gi, ok});
  }
  r.pass = all;
}

inline void write_book(const ExperimentConfig& c, const Covering& book) {
  if (!c.book_out.empty()) write_json_file(c.book_out, to_json(book));
}

inline void run_covering_build(const ExperimentConfig& c, std::size_t d, double eps, ExperimentReport& r) {
  SeededSampler sampler(c.seed);
  const Covering book = build_internal_covering(d, eps, sampler, c.x, c.fail_streak);
  write_book(c, book);
  const CoveringBounds b = internal_covering_bounds(d, eps);
  const bool ok = static_cast<double>(book.size()) <= b.upper;
  r.columns = {"dim", "epsilon", "radius", "J_R", "J_P", "size", "internal_lower", "internal_upper", "seed", "pass"};
  r.rows.push_back({n(d), eps, book.radius(), n(book.meta().j_r), n(book.meta().j_p), n(book.size()), b.lower,
                    b.upper, static_cast<std::int64_t>(c.seed), ok});
  r.pass = ok;
  r.extra["book"] = to_json(book);
}

inline void run_covering_verify(const ExperimentConfig& c, std::optional<double> eps_flag, std::size_t ns,
                                ExperimentReport& r) {
  const Covering book = load_book(c);
  const double eps = eps_flag.value_or(book.radius());
  SeededSampler sampler(c.seed);
  const CoverageReport rep = coverage_verify(book, eps, ns, sampler, c.workers);
  const bool ok = rep.covered_fraction >= 0.999;
  r.columns = {"dim", "epsilon", "radius", "size", "covered_fraction", "std_error", "worst_gap", "num_samples", "seed", "pass"};
  r.rows.push_back({n(book.dim()), eps, book.radius(), n(book.size()), rep.covered_fraction, rep.std_error,
                    rep.worst_gap, n(ns), static_cast<std::int64_t>(c.seed), ok});
  r.pass = ok;
  r.config["epsilon"] = eps;
}

inline void run_encode(const ExperimentConfig& c, std::optional<double> eps_flag, std::size_t ns, ExperimentReport& r) {
  const Covering book = load_book(c);
  r.config["dim"] = book.dim();
  if (!c.target_path.empty()) {
    const PureState phi = pure_state_from_json(read_json_file(c.target_path));
    const DeterministicEncoding det = deterministic_encode(phi, book);
    const EncodingResult res = probabilistic_encode(phi, book);
    r.columns = {"label", "deterministic_distance", "achieved_distance", "duality_gap", "iterations", "converged", "pass"};
    Cell pass_cell;
    if (eps_flag) {
      r.pass = res.achieved_distance < *eps_flag;
      pass_cell = *r.pass;
    }
    r.rows.push_back({n(det.label), det.distance, res.achieved_distance, res.duality_gap, n(res.iterations),
                      res.converged, pass_cell});
    r.extra["deterministic"] = json{{"label", det.label}, {"distance", det.distance}};
    r.extra["probabilistic"] = to_json(res);
    return;
  }
  SeededSampler sampler(c.seed);
  double max_det = 0.0, max_prob = 0.0, sum_det = 0.0, sum_prob = 0.0, max_gap = 0.0;
  std::size_t unconverged = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    const PureState phi = haar_sample(book.dim(), sampler);
    const double det = deterministic_encode(phi, book).distance;
    const EncodingResult res = probabilistic_encode(phi, book);
    max_det = std::max(max_det, det);
    max_prob = std::max(max_prob, res.achieved_distance);
    sum_det += det;
    sum_prob += res.achieved_distance;
    max_gap = std::max(max_gap, res.duality_gap);
    if (!res.converged) ++unconverged;
  }
  r.columns = {"dim", "book_size", "num_targets", "max_deterministic", "max_probabilistic", "mean_deterministic",
               "mean_probabilistic", "max_duality_gap", "unconverged", "seed", "pass"};
  Cell pass_cell;
  if (eps_flag) {
    r.pass = max_prob < *eps_flag;
    pass_cell = *r.pass;
  }
  const auto nd = static_cast<double>(ns);
  r.rows.push_back({n(book.dim()), n(book.size()), n(ns), max_det, max_prob, sum_det / nd, sum_prob / nd, max_gap,
                    n(unconverged), static_cast<std::int64_t>(c.seed), pass_cell});
}

inline void run_minimax(const ExperimentConfig& c, std::size_t ns, ExperimentReport& r) {
  const Covering book = load_book(c);
  r.config["dim"] = book.dim();
  MinimaxOptions opt;
  if (c.restarts) opt.restarts = *c.restarts;
  SeededSampler sampler(c.seed);
  const MinimaxResult m = verify_minimax(book, ns, sampler, opt);
  const bool ok = m.defect() <= 1e-3;
  r.columns = {"dim", "book_size", "lhs", "rhs", "defect", "samples", "restarts", "seed", "pass"};
  r.rows.push_back({n(book.dim()), n(book.size()), m.lhs, m.rhs, m.defect(), n(ns), n(opt.restarts),
                    static_cast<std::int64_t>(c.seed), ok});
  r.pass = ok;
}

inline void run_octahedron(ExperimentReport& r) {
  const Covering book = octahedron_book();
  const PureState far = octahedron_farthest_state();
  const double eps = probabilistic_encode(far, book).achieved_distance;
  const double delta = deterministic_encode(far, book).distance;
  const double expected = octahedron_epsilon();
  const double defect = delta * delta - eps;
  const bool ok = std::abs(eps - expected) <= 1e-9 && std::abs(delta - std::sqrt(expected)) <= 1e-9 &&
                  std::abs(defect) <= 1e-9;
  r.columns = {"epsilon", "delta", "delta_squared_minus_epsilon", "expected_epsilon", "pass"};
  r.rows.push_back({eps, delta, defect, expected, ok});
  r.pass = ok;
}

/// The halving claim needs a book with no holes, so packing runs longer here
/// than the builder's default.
inline constexpr std::size_t kHalvingFailStreak = 10'000;

inline void run_halving(const ExperimentConfig& c, std::size_t d, double eps, std::size_t ns, ExperimentReport& r) {
  SeededSampler sampler(c.seed);
  const double radius = std::sqrt(eps);
  const Covering book = build_internal_covering(d, radius, sampler, c.x, c.fail_streak.value_or(kHalvingFailStreak));
  write_book(c, book);
  double max_prob = 0.0, max_det = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    const PureState phi = haar_sample(d, sampler);
    max_prob = std::max(max_prob, probabilistic_encode(phi, book).achieved_distance);
    max_det = std::max(max_det, deterministic_encode(phi, book).distance);
  }
  const bool ok = max_prob < eps;
  r.columns = {"dim", "epsilon", "book_radius", "book_size", "num_targets", "max_probabilistic", "max_deterministic",
               "deterministic_exceeds_epsilon", "seed", "pass"};
  r.rows.push_back({n(d), eps, radius, n(book.size()), n(ns), max_prob, max_det, max_det >= eps,
                    static_cast<std::int64_t>(c.seed), ok});
  r.pass = ok;
}

inline void run_bounds(std::size_t d, double eps, ExperimentReport& r) {
  const CoveringBounds in = internal_covering_bounds(d, eps);
  const BitLengthBounds prob = bit_length_bounds_probabilistic(d, eps);
  Cell ext, det_lo, det_hi, ratio;
  if (eps <= 0.5) {
    ext = external_covering_lower_bound(d, eps);
    const BitLengthBounds det = bit_length_bounds_deterministic(d, eps);
    det_lo = det.lower_bits;
    det_hi = det.upper_bits;
    if (det.lower_bits > 0.0) ratio = prob.upper_bits / det.lower_bits;
  }
  r.columns = {"dim", "epsilon", "rate", "internal_lower", "internal_upper", "external_lower", "det_lower_bits",
               "det_upper_bits", "prob_lower_bits", "prob_upper_bits", "prob_upper_over_det_lower"};
  // Negative probabilistic lower bounds are shown as 0 here; the library reports them raw.
  r.rows.push_back({n(d), eps, prob.rate, in.lower, in.upper, ext, det_lo, det_hi, std::max(0.0, prob.lower_bits),
                    prob.upper_bits, ratio});
}

}  // namespace detail

/// Runs one experiment. Throws std::invalid_argument for bad configurations and
/// propagates std::domain_error from the numerical routines.
inline ExperimentReport run(const ExperimentConfig& cfg) {
  if (cfg.workers < 1) throw std::invalid_argument("--workers must be >= 1");
  if (cfg.samples && *cfg.samples < 1) throw std::invalid_argument("--samples must be >= 1");
  if (cfg.epsilon && !(*cfg.epsilon > 0.0 && *cfg.epsilon <= 1.0)) {
    throw std::invalid_argument("--epsilon must lie in (0, 1]");
  }
  if (cfg.dim && *cfg.dim < 1) throw std::invalid_argument("--dim must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = cfg.dim.value_or(detail::default_dim(cfg.command));
  const double eps = cfg.epsilon.value_or(detail::default_epsilon(cfg.command));
  const std::size_t ns = cfg.samples.value_or(detail::default_samples(cfg.command));

  ExperimentReport r;
  r.command = command_name(cfg.command);
  r.config = detail::config_json(cfg, d, eps, ns);
  r.extra = json::object();
  switch (cfg.command) {
    case Command::volume: detail::run_volume(cfg, d, eps, ns, r); break;
    case Command::fig3: detail::run_fig3(cfg, d, eps, ns, r); break;
    case Command::covering_build: detail::run_covering_build(cfg, d, eps, r); break;
    case Command::covering_verify: detail::run_covering_verify(cfg, cfg.epsilon, ns, r); break;
    case Command::encode: detail::run_encode(cfg, cfg.epsilon, ns, r); break;
    case Command::minimax: detail::run_minimax(cfg, ns, r); break;
    case Command::octahedron: detail::run_octahedron(r); break;
    case Command::halving: detail::run_halving(cfg, d, eps, ns, r); break;
    case Command::bounds: detail::run_bounds(d, eps, r); break;
  }
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// CSV: header row, data rows, then `# wall_time_seconds=...` when timing is on.
/// JSON: {command, config, columns, rows[{col: value}], pass, extra, wall_time_seconds}.
inline std::string render(const ExperimentReport& r, Format f, bool include_timing = true) {
  std::ostringstream out;
  if (f == Format::csv) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << r.columns[i];
    out << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::cell_text(row[i]);
      out << '\n';
    }
    if (include_timing) out << "# wall_time_seconds=" << detail::format_double(r.wall_time_seconds) << '\n';
    return out.str();
  }
  json rows = json::array();
  for (const auto& row : r.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < row.size() && i < r.columns.size(); ++i) o[r.columns[i]] = detail::cell_json(row[i]);
    rows.push_back(std::move(o));
  }
  json j{{"command", r.command}, {"config", r.config}, {"columns", r.columns}, {"rows", std::move(rows)}};
  j["pass"] = r.pass ? json(*r.pass) : json(nullptr);
  if (!r.extra.empty()) j["extra"] = r.extra;
  if (include_timing) j["wall_time_seconds"] = r.wall_time_seconds;
  out << j.dump(2) << '\n';
  return out.str();
}

}  // namespace qsc
