// quenchwr run|compare <scenario.json>
// Exit status: 0 success, 1 invalid input, 2 solver failure or no convergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quenchwr/quenchwr.hpp"

namespace fs = std::filesystem;
using namespace quenchwr;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kSolverFailure = 2;

struct Options {
  std::string scenario;
  std::optional<std::string> mode;
  std::optional<double> tol;
  std::optional<std::size_t> kmax;
  std::optional<std::size_t> windows;
  std::optional<std::string> outdir;
  bool verbose = false;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Output directory for a diagnostics file when the scenario itself is unusable.
fs::path fallback_outdir(const Options& opt) {
  if (opt.outdir) return *opt.outdir;
  std::ifstream in(opt.scenario);
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (!doc.is_discarded() && doc.is_object() && doc.contains("output_dir") &&
      doc["output_dir"].is_string()) {
    return doc["output_dir"].get<std::string>();
  }
  return "out";
}

void write_diagnostics(const fs::path& dir, const std::string& text) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "diagnostics.txt");
  out << text << '\n';
}

Scenario load_with_overrides(const Options& opt) {
  Scenario sc = load_scenario(opt.scenario);
  if (opt.mode) {
    if (*opt.mode == "plain") sc.solver.mode = WrMode::Plain;
    else if (*opt.mode == "accelerated") sc.solver.mode = WrMode::Accelerated;
    else throw ValidationError("--mode: expected plain or accelerated, got '" + *opt.mode + "'");
  }
  if (opt.tol) sc.solver.tol = *opt.tol;
  if (opt.kmax) sc.solver.k_max = *opt.kmax;
  if (opt.windows) sc.solver.windows = *opt.windows;
  if (opt.outdir) sc.output_dir = *opt.outdir;
  sc.validate();
  return sc;
}

void log(const Options& opt, const std::string& msg) {
  if (opt.verbose) std::cerr << "[quenchwr] " << msg << '\n';
}

nlohmann::json paths_json(const std::vector<fs::path>& paths) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : paths) a.push_back(p.string());
  return a;
}

int cmd_run(const Options& opt) {
  Stopwatch clock;
  nlohmann::json timings;
  const Scenario sc = load_with_overrides(opt);
  timings["load"] = clock.lap();
  const fs::path dir = sc.output_dir;
  log(opt, "loaded '" + opt.scenario + "', mode " + to_string(sc.solver.mode));

  const NetworkSolution sol = run_wr(sc, sc.solver);
  timings["solve"] = clock.lap();
  for (std::size_t w = 0; w < sol.report.windows.size(); ++w) {
    const auto& wr = sol.report.windows[w];
    log(opt, "window " + std::to_string(w) + ": " + std::to_string(wr.iterations) + " iterations, residual " +
                 (wr.residuals.empty() ? std::string("-") : detail::format_double(wr.residuals.back())));
  }

  std::vector<fs::path> written = write_solution(dir, sc, sol);
  written.push_back(dir / "scenario.normalized.json");
  write_json_file(written.back(), to_json(sc));
  timings["write"] = clock.lap();

  const int status = sol.report.converged ? kOk : kSolverFailure;
  if (!sol.report.converged) {
    written.push_back(dir / "diagnostics.txt");
    write_text_file(written.back(), sol.report.diagnostic);
  }
  nlohmann::json summary{{"command", "run"},
                         {"scenario", opt.scenario},
                         {"exit_status", status},
                         {"report", to_json(sol.report)},
                         {"timings_s", timings}};
  written.push_back(dir / "summary.json");
  summary["artifacts"] = paths_json(written);
  write_json_file(written.back(), summary);

  std::cout << (sol.report.converged ? "converged" : "NOT converged") << ": mode "
            << to_string(sol.report.mode) << ", " << sol.report.total_iterations()
            << " iterations, contraction " << sol.report.contraction() << ", outputs in " << dir.string()
            << '\n';
  if (!sol.report.converged) std::cerr << sol.report.diagnostic << '\n';
  return status;
}

int cmd_compare(const Options& opt) {
  Stopwatch clock;
  nlohmann::json timings;
  const Scenario sc = load_with_overrides(opt);
  timings["load"] = clock.lap();
  const fs::path dir = sc.output_dir;

  const NetworkSolution plain = run_plain_wr(sc, sc.solver);
  timings["plain"] = clock.lap();
  log(opt, "plain: " + std::to_string(plain.report.total_iterations()) + " iterations");
  const NetworkSolution accel = run_accelerated_wr(sc, sc.solver);
  timings["accelerated"] = clock.lap();
  log(opt, "accelerated: " + std::to_string(accel.report.total_iterations()) + " iterations");
  const NetworkSolution ref = monolithic_reference(sc, sc.circuit_grid());
  timings["monolithic"] = clock.lap();

  const auto rows = compare_solutions(sc, plain, accel, ref);
  fs::create_directories(dir);
  std::vector<fs::path> written{dir / "comparison.csv", dir / "compare.json"};
  write_comparison_csv(written[0], rows);

  nlohmann::json table = nlohmann::json::array();
  double worst_plain = 0.0;
  double worst_accel = 0.0;
  for (const auto& r : rows) {
    table.push_back({{"magnet", r.magnet},
                     {"quantity", r.quantity},
                     {"plain_vs_reference", r.plain_vs_reference},
                     {"accelerated_vs_reference", r.accelerated_vs_reference},
                     {"plain_vs_accelerated", r.plain_vs_accelerated}});
    worst_plain = std::max(worst_plain, r.plain_vs_reference);
    worst_accel = std::max(worst_accel, r.accelerated_vs_reference);
  }
  const bool converged = plain.report.converged && accel.report.converged;
  const int status = converged ? kOk : kSolverFailure;
  write_json_file(written[1], {{"rows", table},
                               {"max_plain_vs_reference", worst_plain},
                               {"max_accelerated_vs_reference", worst_accel},
                               {"iterations", {{"plain", plain.report.total_iterations()},
                                               {"accelerated", accel.report.total_iterations()}}},
                               {"plain", to_json(plain.report)},
                               {"accelerated", to_json(accel.report)},
                               {"timings_s", timings}});
  if (!converged) {
    written.push_back(dir / "diagnostics.txt");
    write_text_file(written.back(), "plain: " + plain.report.diagnostic +
                                        "\naccelerated: " + accel.report.diagnostic);
  }
  written.push_back(dir / "summary.json");
  write_json_file(written.back(), {{"command", "compare"},
                                   {"scenario", opt.scenario},
                                   {"exit_status", status},
                                   {"artifacts", paths_json(written)},
                                   {"timings_s", timings}});

  std::printf("%-8s %-6s %22s %22s %22s\n", "magnet", "qty", "plain_vs_reference",
              "accel_vs_reference", "plain_vs_accel");
  for (const auto& r : rows) {
    std::printf("%-8s %-6s %22.6e %22.6e %22.6e\n", r.magnet.c_str(), r.quantity.c_str(),
                r.plain_vs_reference, r.accelerated_vs_reference, r.plain_vs_accelerated);
  }
  std::printf("iterations: plain %zu, accelerated %zu\n", plain.report.total_iterations(),
              accel.report.total_iterations());
  return status;
}

template <typename Command>
int guarded(const Options& opt, Command command) {
  try {
    return command(opt);
  } catch (const ValidationError& e) {
    write_diagnostics(fallback_outdir(opt), std::string("validation error: ") + e.what());
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    write_diagnostics(fallback_outdir(opt), std::string("solver failure: ") + e.what());
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("scenario", opt.scenario, "scenario JSON file")->required();
  cmd->add_option("--tol", opt.tol, "relative sup-norm tolerance");
  cmd->add_option("--kmax", opt.kmax, "maximum WR iterations per window");
  cmd->add_option("--windows", opt.windows, "number of equal time windows");
  cmd->add_option("--outdir", opt.outdir, "output directory");
  cmd->add_flag("--verbose,-v", opt.verbose, "progress on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waveform-relaxation co-simulation of superconducting magnet networks"};
  app.require_subcommand(1);
  Options opt;
  CLI::App* run = app.add_subcommand("run", "run plain or accelerated waveform relaxation");
  add_common(run, opt);
  run->add_option("--mode", opt.mode, "plain|accelerated")
      ->check(CLI::IsMember({"plain", "accelerated"}));
  CLI::App* compare = app.add_subcommand("compare", "plain vs accelerated vs monolithic reference");
  add_common(compare, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  if (run->parsed()) return guarded(opt, cmd_run);
  return guarded(opt, cmd_compare);
}
