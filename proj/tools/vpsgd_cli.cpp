// Command-line front end: estimate, sweep, oracle, replicate, check.

#include "vpsgd/config.hpp"
#include "vpsgd/errors.hpp"
#include "vpsgd/experiment.hpp"
#include "vpsgd/oracle.hpp"
#include "vpsgd/output.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kDiverged = 1;
constexpr int kUsage = 2;

void print_value(const std::string& name, double value) {
  std::cout << name << '=' << vpsgd::format_double(value) << '\n';
}

std::filesystem::path out_dir_for(const vpsgd::ExperimentConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.output.empty()) return cfg.output;
  return ".";
}

int report_divergence(const std::vector<vpsgd::RunTrace>& traces) {
  int code = kOk;
  for (const auto& t : traces) {
    if (t.diverged) {
      std::cerr << "seed " << t.seed << " diverged: " << t.diagnostic << '\n';
      code = kDiverged;
    }
  }
  return code;
}

int run_estimate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
  vpsgd::ExperimentConfig cfg = vpsgd::load_config(config_path);
  if (seed) cfg.seeds = {*seed};
  const auto traces = vpsgd::run_experiment(cfg);
  const auto dir = out_dir_for(cfg, out);
  vpsgd::write_run_outputs(traces, cfg, dir);
  std::cout << "wrote " << traces.size() << " trace(s) to " << dir.string() << '\n';
  return report_divergence(traces);
}

int run_sweep(const std::string& config_path, const std::string& axis, const std::vector<std::int64_t>& values,
              const std::string& out) {
  vpsgd::ExperimentConfig cfg = vpsgd::load_config(config_path);
  const auto summary = vpsgd::sweep(cfg, axis, values);
  const auto dir = out_dir_for(cfg, out);
  vpsgd::write_sweep_outputs(summary, cfg, dir);
  vpsgd::write_sweep_csv(summary, cfg, std::cout);
  int code = kOk;
  for (const auto& per_value : summary.traces) code = std::max(code, report_divergence(per_value));
  return code;
}

int run_oracle(const std::string& model, double theta01, double theta02, double sigma, std::int64_t n,
               std::optional<double> dt) {
  if (model != "quadratic") throw vpsgd::UsageError("oracle closed forms exist only for --model quadratic");
  const vpsgd::QuadraticTruth truth{theta01, theta02, sigma};
  const auto pt = vpsgd::pseudo_targets(truth, n);
  const auto mom = vpsgd::stationary_moments_quadratic(truth, n);
  vpsgd::ParamVec at_star(2);
  at_star << pt.theta1_star, theta02;
  print_value("alpha0", truth.alpha0());
  print_value("alpha_star", pt.alpha_star);
  print_value("theta1_star", pt.theta1_star);
  print_value("theta2_star", pt.theta2_star);
  print_value("finite_n_objective_min", vpsgd::finite_n_objective_quadratic(at_star, truth, n));
  print_value("particle_variance", mom.particle_variance);
  print_value("mean_variance", mom.mean_variance);
  if (dt) {
    const auto em = vpsgd::euler_stationary_moments_quadratic(truth, n, *dt);
    print_value("euler_particle_variance", em.particle_variance);
    print_value("euler_mean_variance", em.mean_variance);
  }
  return kOk;
}

int run_replicate(const std::string& figure, double scale, const std::string& out) {
  const bool diverged = vpsgd::replicate_figure(figure, out, scale);
  std::cout << "wrote " << figure << " outputs to " << out << '\n';
  if (diverged) std::cerr << "at least one run diverged\n";
  return diverged ? kDiverged : kOk;
}

int run_check(std::uint64_t seed, int cases) {
  bool ok = true;
  struct TangentCase {
    const char* name;
    vpsgd::Model model;
    vpsgd::ParamVec theta;
  };
  vpsgd::ParamVec quad(2), fhn(4), kur(1);
  quad << 1.2, 0.5;
  fhn << 0.9, 0.4, 0.1, 1.0;
  kur << 1.5;
  const std::vector<TangentCase> tangent_cases = {
      {"quadratic", vpsgd::Model::quadratic(), quad},
      {"fitzhugh-nagumo", vpsgd::Model::fitzhugh_nagumo(), fhn},
      {"kuramoto", vpsgd::Model::kuramoto(), kur},
  };
  constexpr double kTangentTol = 1e-3;
  constexpr double kRaoBlackwellTol = 1e-12;
  for (const auto& c : tangent_cases) {
    const auto r = vpsgd::fd_tangent_check(c.model, c.theta, 3, 0.05, 200, 1e-5, seed);
    print_value(std::string("fd_tangent.") + c.name, r.rel_error);
    ok = ok && r.rel_error <= kTangentTol;
  }
  for (const auto& c : tangent_cases) {
    double worst = 0.0;
    vpsgd::RngStream rng(seed, 7);
    for (vpsgd::Index m : {1, 2, 5, 20}) {
      for (int i = 0; i < cases; ++i) {
        const auto cc = vpsgd::random_check_case(c.model, m, rng);
        worst = std::max(worst, vpsgd::rao_blackwell_check(c.model, cc.state, cc.x_obs, cc.dx_obs, 0.1).rel_error);
      }
    }
    print_value(std::string("rao_blackwell.") + c.name, worst);
    ok = ok && worst <= kRaoBlackwellTol;
  }
  std::cout << "status=" << (ok ? "pass" : "fail") << '\n';
  return ok ? kOk : kDiverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online parameter estimation for interacting particle systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  auto* estimate = app.add_subcommand("estimate", "Run the estimators on a config");
  estimate->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  estimate->add_option("--seed", seed, "Run only this seed");
  estimate->add_option("--out", out, "Output directory");

  std::string axis;
  std::vector<std::int64_t> values;
  auto* sweep = app.add_subcommand("sweep", "Sweep N or M and report L2 errors");
  sweep->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "N or M")->required()->check(CLI::IsMember({"N", "M"}));
  sweep->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
  sweep->add_option("--out", out, "Output directory");

  std::string model = "quadratic";
  double theta01 = 0.0, theta02 = 0.0, sigma = 1.0;
  std::int64_t n = 0;
  std::optional<double> dt;
  auto* oracle = app.add_subcommand("oracle", "Closed-form values for the quadratic model");
  oracle->add_option("--model", model, "Model name")->capture_default_str();
  oracle->add_option("--theta01", theta01, "True confinement parameter")->required();
  oracle->add_option("--theta02", theta02, "True interaction parameter")->required();
  oracle->add_option("--sigma", sigma, "Noise level")->capture_default_str();
  oracle->add_option("--n", n, "Number of particles")->required();
  oracle->add_option("--dt", dt, "Also report Euler-chain stationary moments");

  std::string figure;
  double scale = 1.0;
  auto* replicate = app.add_subcommand("replicate", "Run a built-in figure preset");
  replicate->add_option("--figure", figure, "fig1a .. fig6c")->required()->check(CLI::IsMember(vpsgd::figure_ids()));
  replicate->add_option("--scale", scale, "Shrink steps and seeds by this factor in (0, 1]")->capture_default_str();
  replicate->add_option("--out", out, "Output directory")->required();

  std::uint64_t check_seed = 1;
  int check_cases = 100;
  auto* check = app.add_subcommand("check", "Tangent and Rao-Blackwell self-checks");
  check->add_option("--seed", check_seed, "Random seed")->capture_default_str();
  check->add_option("--cases", check_cases, "Random states per model and M")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*estimate) return run_estimate(config_path, seed, out);
    if (*sweep) return run_sweep(config_path, axis, values, out);
    if (*oracle) return run_oracle(model, theta01, theta02, sigma, n, dt);
    if (*replicate) return run_replicate(figure, scale, out);
    if (*check) return run_check(check_seed, check_cases);
  } catch (const vpsgd::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const vpsgd::NumericInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const vpsgd::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  }
  return kUsage;
}
