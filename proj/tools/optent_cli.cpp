// optent: solve, sweep, verify and oracle commands.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "optent/optent.hpp"

namespace {

using optent::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPmp = 2;

struct Settings {
  double g_max = 1.0;
  double horizon = 3.141592653589793;
  std::string method = "enumerate";
  std::size_t grid = 4000;
  double tol_feas = optent::kFeasibilityTol;
  std::uint64_t seed = 20161001;
  std::size_t random_starts = 3;
  std::string out;
  std::string traj;
  std::string plot;
  // sweep
  std::string vary = "T";
  double from = 0.0, to = 0.0, step = 0.0;
  // verify / oracle
  std::string input;
  bool large_truncation = false;
  std::size_t na = 0, nb = 0;
  double fock_step = optent::kDefaultMaxStep;
  std::size_t checkpoints = 20;
};

optent::EnumerateOptions solver_options(const Settings& s) {
  optent::EnumerateOptions o;
  o.direct.intervals = s.grid;
  o.direct.feasibility_tol = s.tol_feas;
  o.direct.seed = s.seed;
  o.direct.random_starts = s.random_starts;
  return o;
}

json solve_config(const std::string& command, const Settings& s) {
  json c;
  c["command"] = command;
  c["g_max"] = s.g_max;
  c["T"] = s.horizon;
  c["method"] = s.method;
  c["grid"] = s.grid;
  c["tol_feas"] = s.tol_feas;
  c["seed"] = s.seed;
  c["random_starts"] = s.random_starts;
  return c;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    optent::write_file(path, text);
  }
}

void write_control_plot(const std::string& path, const optent::SolveResult& res) {
  std::vector<double> x, y;
  double t = 0.0;
  for (const auto& seg : res.profile.segments()) {
    x.push_back(t);
    y.push_back(seg.g);
    t += seg.duration;
    x.push_back(t);
    y.push_back(seg.g);
  }
  std::ostringstream os;
  optent::write_svg_plot(os, x, y, "t", "g(t)");
  optent::write_file(path, os.str());
}

int cmd_solve(const Settings& s) {
  const auto method = optent::method_from_string(s.method);
  const auto res = optent::solve(method, s.g_max, s.horizon, solver_options(s));
  emit(s.out, optent::to_json(res, solve_config("solve", s)).dump(2) + "\n");
  if (!s.traj.empty()) {
    std::ostringstream os;
    if (res.profile.empty()) {
      os << "t,g,q1,q2,q3,j0,entropy\n";
    } else {
      optent::write_trajectory_csv(os, optent::integrate_reduced(res.profile));
    }
    optent::write_file(s.traj, os.str());
  }
  if (!s.plot.empty()) write_control_plot(s.plot, res);

  if (!res.feasible(s.tol_feas)) {
    std::cerr << "error: result violates the terminal constraints\n";
    return kExitUsage;
  }
  if (!res.pmp || res.pmp->status == optent::PmpReport::Status::Underdetermined) {
    std::cerr << "warning: no switch conditions to certify (r = " << res.r << ")\n";
    return kExitOk;
  }
  if (!res.pmp->pass) {
    for (const auto& v : res.pmp->violations) std::cerr << "pmp: " << v << '\n';
    return kExitPmp;
  }
  return kExitOk;
}

int cmd_sweep(const Settings& s) {
  optent::SweepOptions o;
  if (s.vary == "g" || s.vary == "G" || s.vary == "g-max") {
    o.axis = optent::SweepAxis::G;
    o.fixed = s.horizon;
  } else if (s.vary == "T" || s.vary == "t") {
    o.axis = optent::SweepAxis::T;
    o.fixed = s.g_max;
  } else {
    throw optent::Error(optent::ErrorKind::InvalidArgument, "--vary must be g or T");
  }
  o.from = s.from;
  o.to = s.to;
  o.step = s.step;
  o.method = optent::method_from_string(s.method);
  o.solver = solver_options(s);
  optent::sweep_points(o.from, o.to, o.step);  // validates before anything is written
  const auto rows = optent::sweep(o);

  json cfg = solve_config("sweep", s);
  cfg["vary"] = o.axis == optent::SweepAxis::G ? "g" : "T";
  cfg["from"] = s.from;
  cfg["to"] = s.to;
  cfg["step"] = s.step;
  std::ostringstream os;
  optent::write_sweep_csv(os, rows, cfg);
  emit(s.out, os.str());
  if (!s.plot.empty()) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
      x.push_back(r.axis_value);
      y.push_back(r.result ? r.result->r : std::nan(""));
    }
    std::ostringstream svg;
    optent::write_svg_plot(svg, x, y, o.axis == optent::SweepAxis::G ? "G" : "T", "r");
    optent::write_file(s.plot, svg.str());
  }
  for (const auto& r : rows)
    if (r.status != "ok") std::cerr << "warning: " << r.axis_value << ": " << r.status << '\n';
  return kExitOk;
}

int cmd_verify(const Settings& s) {
  const auto stored = optent::stored_result_from_json(optent::read_json_file(s.input));
  const auto out = optent::verify_stored(stored, s.tol_feas);
  json j;
  j["input"] = s.input;
  j["q_final"] = {out.q_final.q1, out.q_final.q2, out.q_final.q3};
  j["endpoint_feasible"] = !out.infeasible;
  if (out.infeasible) j["endpoint_message"] = out.endpoint_message;
  j["pmp"] = out.report ? optent::to_json(*out.report) : json(nullptr);
  if (out.underdetermined && !out.report) j["pmp"] = {{"status", "underdetermined"}, {"pass", false}};
  emit(s.out, j.dump(2) + "\n");

  if (out.infeasible) {
    std::cerr << "verify: " << out.endpoint_message << '\n';
    for (const auto& v : out.report->violations) std::cerr << "verify: " << v << '\n';
    return kExitPmp;
  }
  if (out.underdetermined) {
    std::cerr << "warning: underdetermined, no switch conditions to certify\n";
    return kExitOk;
  }
  if (!out.pass()) {
    for (const auto& v : out.report->violations) std::cerr << "verify: " << v << '\n';
    return kExitPmp;
  }
  return kExitOk;
}

int cmd_oracle(const Settings& s) {
  const auto stored = optent::stored_result_from_json(optent::read_json_file(s.input));
  const auto profile = optent::stored_profile(stored);
  std::size_t na = s.na, nb = s.nb;
  const std::size_t fallback = s.large_truncation ? optent::kLargeTruncation : optent::kDefaultTruncation;
  if (na == 0) na = fallback;
  if (nb == 0) nb = fallback;

  // Geometric photon statistics of the target: mass above level k is tanh^(2k) r.
  const double r_est = profile.empty() ? 0.0 : std::max(0.0, optent::r_from_q1(optent::propagate_reduced(profile).q1));
  const double top = static_cast<double>(std::min(na, nb) - 2);
  const double predicted_tail = r_est > 0.0 ? std::pow(std::tanh(r_est), 2.0 * top) : 0.0;
  if (predicted_tail > optent::kTailMassLimit) {
    std::cerr << "oracle: r = " << r_est << " needs more than " << std::min(na, nb)
              << " levels per mode (predicted tail mass " << predicted_tail << " > "
              << optent::kTailMassLimit << ").\n"
              << (s.large_truncation ? "Raise --na/--nb.\n"
                                     : "Rerun with --large-truncation (or larger --na/--nb).\n");
    return kExitUsage;
  }
  const auto rep = optent::run_oracle(profile, na, nb, s.fock_step, s.checkpoints);
  json cfg;
  cfg["command"] = "oracle";
  cfg["input"] = s.input;
  cfg["large_truncation"] = s.large_truncation;
  emit(s.out, optent::to_json(rep, cfg).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal coupling pulses for optomechanical entanglement"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags override)");
  app.require_subcommand(1);
  Settings s;

  auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--method", s.method, "direct | switch | enumerate")
        ->check(CLI::IsMember({"direct", "switch", "enumerate"}));
    sub->add_option("--grid", s.grid, "direct-transcription intervals")->check(CLI::Range(100, 10000000));
    sub->add_option("--tol-feas", s.tol_feas, "terminal feasibility tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed-set", s.seed, "seed of the random multi-start patterns");
    sub->add_option("--random-starts", s.random_starts, "number of random bang-pattern seeds");
  };

  auto* solve = app.add_subcommand("solve", "maximize r for one (G, T)");
  solve->add_option("--g-max", s.g_max, "control bound G")->required()->check(CLI::PositiveNumber);
  solve->add_option("--T", s.horizon, "duration T")->required()->check(CLI::NonNegativeNumber);
  add_solver_flags(solve);
  solve->add_option("--out", s.out, "result JSON (default stdout)");
  solve->add_option("--traj", s.traj, "trajectory CSV");
  solve->add_option("--plot", s.plot, "control profile SVG");

  auto* sweep = app.add_subcommand("sweep", "r over a range of G or T");
  sweep->add_option("--vary", s.vary, "g or T")->required();
  sweep->add_option("--from", s.from, "first axis value")->required();
  sweep->add_option("--to", s.to, "last axis value")->required();
  sweep->add_option("--step", s.step, "axis step")->required();
  sweep->add_option("--g-max", s.g_max, "control bound when sweeping T");
  sweep->add_option("--T", s.horizon, "duration when sweeping G");
  add_solver_flags(sweep);
  sweep->add_option("--out", s.out, "sweep CSV (default stdout)");
  sweep->add_option("--plot", s.plot, "r vs axis SVG");

  auto* verify = app.add_subcommand("verify", "re-check a result file against the minimum principle");
  verify->add_option("result", s.input, "result JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--tol-feas", s.tol_feas, "terminal feasibility tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--out", s.out, "report JSON (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "cross-check a result in the truncated Fock basis");
  oracle->add_option("result", s.input, "result JSON")->required()->check(CLI::ExistingFile);
  oracle->add_flag("--large-truncation", s.large_truncation, "use 240 levels per mode by default");
  oracle->add_option("--na", s.na, "photon levels")->check(CLI::Range(3, 100000));
  oracle->add_option("--nb", s.nb, "phonon levels")->check(CLI::Range(3, 100000));
  oracle->add_option("--step", s.fock_step, "maximum RK4 step")->check(CLI::PositiveNumber);
  oracle->add_option("--checkpoints", s.checkpoints, "comparison times")->check(CLI::PositiveNumber);
  oracle->add_option("--out", s.out, "report JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(s);
    if (*sweep) return cmd_sweep(s);
    if (*verify) return cmd_verify(s);
    if (*oracle) return cmd_oracle(s);
  } catch (const optent::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
