#include "vpsgd/experiment.hpp"

#include "vpsgd/errors.hpp"
#include "vpsgd/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace vpsgd {

namespace {

// Runs fn(0..n-1) on a small pool; results must be written by index.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ParamVec row_vector(const RowMatrix& m, Index row, Index start, Index len) {
  return m.row(row).segment(start, len).transpose();
}

}  // namespace

Index RunTrace::variant_index(Variant v) const {
  for (std::size_t i = 0; i < variants.size(); ++i)
    if (variants[i] == v) return static_cast<Index>(i);
  throw UsageError("trace does not contain variant " + std::string(to_string(v)));
}

ParamVec RunTrace::theta(Index row, Index variant) const {
  if (row < 0 || row >= rows()) throw UsageError("trace row out of range");
  if (variant < 0 || variant >= static_cast<Index>(variants.size())) throw UsageError("trace variant out of range");
  return row_vector(values, row, variant * p, p);
}

std::uint64_t hat_stream(Variant v) noexcept { return 16 + 4 * static_cast<std::uint64_t>(v); }
std::uint64_t tilde_stream(Variant v) noexcept { return 17 + 4 * static_cast<std::uint64_t>(v); }
std::uint64_t index_stream(Variant v) noexcept { return 18 + 4 * static_cast<std::uint64_t>(v); }

ObservedPath simulate_for_seed(const ExperimentConfig& config, const Model& model, std::uint64_t seed) {
  RngStream rng(seed, kObservedStream);
  return simulate_observed(model, config.truth, config.initial_law, config.n, config.steps, config.dt, rng);
}

ParamVec draw_theta_init(const ExperimentConfig& config, std::uint64_t seed) {
  ParamVec theta;
  if (config.theta_init.kind == ThetaInit::Kind::uniform) {
    RngStream rng(seed, kThetaInitStream);
    theta.resize(config.theta_init.lower.size());
    for (Index a = 0; a < theta.size(); ++a) theta[a] = rng.uniform(config.theta_init.lower[a], config.theta_init.upper[a]);
  } else {
    theta = config.theta_init.value;
  }
  const ParamVec& truth0 = config.truth.at(0);
  for (Index a = 0; a < theta.size(); ++a)
    if (!config.mask[static_cast<std::size_t>(a)]) theta[a] = truth0[a];
  return theta;
}

RunTrace run_seed(const ExperimentConfig& config, std::uint64_t seed, const ObservedPath* observed) {
  validate_config(config);
  const Model model = config.make_model();
  ObservedPath own;
  if (!observed) {
    own = simulate_for_seed(config, model, seed);
    observed = &own;
  }
  if (observed->steps() < config.steps) throw UsageError("observed path is shorter than the configured steps");

  const ParamVec theta0 = draw_theta_init(config, seed);
  const Index p = model.param_dim();

  std::vector<EstimatorState> states;
  for (Variant v : config.variants) {
    EstimatorSettings s;
    s.variant = v;
    s.rate = config.rate;
    s.clock = config.clock;
    s.index_policy = config.index_policy;
    s.j = config.j;
    s.k = config.k;
    s.mask = config.mask;
    s.projection = config.projection;
    RngStream hat_rng(seed, hat_stream(v));
    RngStream tilde_rng(seed, tilde_stream(v));
    Ensemble hat = sample_initial(model, config.initial_law, config.m, hat_rng);
    Ensemble tilde = sample_initial(model, config.initial_law, config.m, tilde_rng);
    states.push_back(make_estimator_state(model, std::move(s), theta0, std::move(hat), std::move(tilde),
                                          std::move(hat_rng), std::move(tilde_rng), RngStream(seed, index_stream(v))));
  }

  RunTrace trace;
  trace.seed = seed;
  trace.config_hash = config_hash(config);
  trace.variants = config.variants;
  trace.p = p;
  const Index width = p * static_cast<Index>(states.size());
  const std::int64_t expected_rows = config.steps / config.record_stride + 2;
  trace.values.resize(expected_rows, width);

  auto record = [&](std::int64_t step) {
    const Index r = trace.rows();
    for (std::size_t v = 0; v < states.size(); ++v) {
      trace.values.row(r).segment(static_cast<Index>(v) * p, p) = states[v].theta.transpose();
    }
    trace.steps.push_back(step);
    trace.times.push_back(static_cast<double>(step) * config.dt);
  };

  record(0);
  const Index d = model.state_dim();
  StateVec x(d);
  StateVec dx(d);
  for (std::int64_t k = 0; k < config.steps; ++k) {
    x = observed->positions.row(k).transpose();
    dx = observed->increments.row(k).transpose();
    try {
      for (auto& s : states) estimator_advance(model, s, x, dx, config.dt);
    } catch (const DivergenceError& e) {
      trace.diverged = true;
      trace.diagnostic = e.what();
      break;
    }
    if ((k + 1) % config.record_stride == 0 || k + 1 == config.steps) record(k + 1);
  }
  trace.values.conservativeResize(trace.rows(), width);
  return trace;
}

std::vector<RunTrace> run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  std::vector<RunTrace> traces(config.seeds.size());
  parallel_for(config.seeds.size(), [&](std::size_t i) { traces[i] = run_seed(config, config.seeds[i]); });
  return traces;
}

ParamVec l2_error(const std::vector<RunTrace>& traces, const ParamVec& target, Index variant,
                  std::optional<double> window) {
  if (traces.empty()) throw UsageError("l2_error: no traces");
  if (window && !(*window > 0.0 && *window <= 1.0)) throw UsageError("l2_error: window must lie in (0, 1]");
  ParamVec sum_sq = ParamVec::Zero(target.size());
  for (const auto& tr : traces) {
    if (tr.rows() == 0) throw UsageError("l2_error: empty trace");
    if (tr.p != target.size()) throw UsageError("l2_error: target length mismatch");
    ParamVec estimate;
    if (!window) {
      estimate = tr.final_theta(variant);
    } else {
      const auto count = std::max<Index>(1, static_cast<Index>(std::ceil(*window * static_cast<double>(tr.rows()))));
      estimate = ParamVec::Zero(tr.p);
      for (Index r = tr.rows() - count; r < tr.rows(); ++r) estimate += tr.theta(r, variant);
      estimate /= static_cast<double>(count);
    }
    sum_sq += (estimate - target).array().square().matrix();
  }
  return (sum_sq / static_cast<double>(traces.size())).array().sqrt().matrix();
}

ParamVec resolve_target(const ExperimentConfig& config) {
  const ParamVec truth = config.truth.at(config.steps - 1);
  switch (config.target.kind) {
    case Target::Kind::truth:
      return truth;
    case Target::Kind::explicit_value:
      return config.target.value;
    case Target::Kind::pseudo: {
      if (config.model != "quadratic") throw UsageError("pseudo targets exist only for the quadratic model");
      const QuadraticTruth qt{truth[0], truth[1], config.model_options.sigma.value_or(1.0)};
      const PseudoTargets pt = pseudo_targets(qt, config.n);
      ParamVec out = truth;
      if (config.mask[0] && !config.mask[1]) {
        out[0] = pt.theta1_star;
      } else if (!config.mask[0] && config.mask[1]) {
        out[1] = pt.theta2_star;
      } else if (config.mask[0] && config.mask[1]) {
        throw UsageError("pseudo target is defined per coordinate only when exactly one parameter is estimated");
      }
      return out;
    }
  }
  return truth;
}

SweepSummary sweep(const ExperimentConfig& config, std::string_view axis, const std::vector<std::int64_t>& values) {
  if (axis != "N" && axis != "M") throw UsageError("sweep axis must be \"N\" or \"M\"");
  if (values.empty()) throw UsageError("sweep needs at least one value");
  for (auto v : values)
    if (v < 1) throw UsageError("sweep values must be positive");

  SweepSummary out;
  out.axis = std::string(axis);
  out.values = values;

  std::vector<ExperimentConfig> configs;
  for (auto v : values) {
    ExperimentConfig c = config;
    c.sweep.reset();
    (axis == "N" ? c.n : c.m) = v;
    validate_config(c);
    configs.push_back(std::move(c));
  }

  // The observed system does not depend on M, so an M sweep reuses one path per seed.
  std::vector<ObservedPath> shared;
  if (axis == "M") {
    const Model model = config.make_model();
    shared.resize(config.seeds.size());
    parallel_for(config.seeds.size(), [&](std::size_t s) { shared[s] = simulate_for_seed(config, model, config.seeds[s]); });
  }

  const std::size_t n_seeds = config.seeds.size();
  out.traces.assign(values.size(), std::vector<RunTrace>(n_seeds));
  parallel_for(values.size() * n_seeds, [&](std::size_t idx) {
    const std::size_t vi = idx / n_seeds;
    const std::size_t si = idx % n_seeds;
    out.traces[vi][si] = run_seed(configs[vi], config.seeds[si], shared.empty() ? nullptr : &shared[si]);
  });

  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const ParamVec target = resolve_target(configs[vi]);
    out.targets.push_back(target);
    for (std::size_t v = 0; v < config.variants.size(); ++v) {
      out.rows.push_back(
          {values[vi], config.variants[v], l2_error(out.traces[vi], target, static_cast<Index>(v), config.l2_window)});
    }
  }
  return out;
}

}  // namespace vpsgd
