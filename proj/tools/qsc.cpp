// qsc: command line front end for the experiment runner.
//
//   qsc volume --dim 3 --epsilon 0.5 --samples 1000000 --seed 7
//   qsc covering-build --dim 2 --epsilon 0.5 --book-out book.json
//   qsc encode --book book.json --samples 1000 --format json
//
// Exit status: 0 pass (or no criterion), 1 criterion failed, 2 usage/domain error.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qsc/experiment.hpp"

namespace {

template <class T>
std::optional<T> opt_if(const CLI::Option* o, const T& v) {
  return o->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state compression experiments"};
  app.require_subcommand(1, 1);

  std::size_t dim = 0, samples = 0, fail_streak = 0, restarts = 0;
  double epsilon = 0.0, p0 = 0.0, x = 1.0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string output, format = "csv", book, builtin, book_out, target;
  bool no_timing = false;

  const std::map<std::string, std::string> help = {
      {"volume", "Monte Carlo volume of a trace-distance ball (pure center, or diag(p0,1-p0,...) with --p0)"},
      {"fig3", "mixed-center volumes against the g bound, d=4 eps=0.5 by default"},
      {"covering-build", "randomized internal covering; --book-out writes the code book"},
      {"covering-verify", "sampled coverage of a code book (--book or --builtin)"},
      {"encode", "deterministic and probabilistic encoding of --target, or of Haar samples"},
      {"minimax", "sampled max-min distance against 1 - min max fidelity"},
      {"octahedron", "six Pauli eigenstates: probabilistic and deterministic worst-case distances"},
      {"halving", "sqrt(eps) covering encodes every sampled state to within eps"},
      {"bounds", "covering numbers and bit-length bounds"},
  };

  for (const auto& [name, text] : help) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--dim", dim, "Hilbert space dimension")->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", epsilon, "precision in (0, 1]");
    sub->add_option("--samples", samples, "Monte Carlo samples / targets")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "RNG seed (falls back to QSC_SEED, then 0)");
    sub->add_option("--workers", workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    sub->add_option("--output", output, "write the report here instead of stdout");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--no-timing", no_timing, "omit wall_time_seconds from the report");
    if (name == "volume") sub->add_option("--p0", p0, "largest eigenvalue of a rank-2 diagonal center");
    if (name == "covering-build" || name == "halving") {
      sub->add_option("--x", x, "schedule ratio epsilon_R / epsilon_P (>= 1)");
      sub->add_option("--fail-streak", fail_streak, "consecutive rejections before packing stops")
          ->check(CLI::PositiveNumber);
      sub->add_option("--book-out", book_out, "write the built code book (JSON)");
    }
    if (name == "covering-verify" || name == "encode" || name == "minimax") {
      sub->add_option("--book", book, "code book JSON file");
      sub->add_option("--builtin", builtin, "built-in code book")->check(CLI::IsMember({"octahedron", "z-pair", "zero"}));
    }
    if (name == "encode") sub->add_option("--target", target, "pure state JSON {dim, re, im}");
    if (name == "minimax") sub->add_option("--restarts", restarts, "hill-climb restarts per side")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    qsc::ExperimentConfig cfg;
    cfg.command = *qsc::parse_command(sub->get_name());
    cfg.dim = opt_if(sub->get_option("--dim"), dim);
    cfg.epsilon = opt_if(sub->get_option("--epsilon"), epsilon);
    cfg.samples = opt_if(sub->get_option("--samples"), samples);
    cfg.seed = qsc::resolve_seed(opt_if(sub->get_option("--seed"), seed));
    cfg.workers = workers;
    cfg.output_path = output;
    cfg.format = format == "json" ? qsc::Format::json : qsc::Format::csv;
    if (cfg.command == qsc::Command::volume) cfg.p0 = opt_if(sub->get_option("--p0"), p0);
    if (cfg.command == qsc::Command::covering_build || cfg.command == qsc::Command::halving) {
      cfg.x = opt_if(sub->get_option("--x"), x);
      cfg.fail_streak = opt_if(sub->get_option("--fail-streak"), fail_streak);
      cfg.book_out = book_out;
    }
    cfg.book_path = book;
    cfg.builtin_book = builtin;
    cfg.target_path = target;
    if (cfg.command == qsc::Command::minimax) cfg.restarts = opt_if(sub->get_option("--restarts"), restarts);

    const qsc::ExperimentReport report = qsc::run(cfg);
    const std::string body = qsc::render(report, cfg.format, !no_timing);
    if (output.empty()) {
      std::cout << body;
    } else {
      std::ofstream out(output);
      if (!out) throw std::invalid_argument("cannot write " + output);
      out << body;
    }
    return qsc::exit_code(report);
  } catch (const std::exception& e) {
    std::cerr << "qsc " << sub->get_name() << ": error: " << e.what() << '\n';
    return 2;
  }
}
