#include "vpsgd/output.hpp"

#include "vpsgd/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace vpsgd {

namespace detail {
struct PresetSource {
  const char* id;
  const char* json;
};
extern const PresetSource kPresets[];
extern const std::size_t kPresetCount;
}  // namespace detail

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw UsageError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

std::string column_prefix(Variant v) { return v == Variant::averaged ? "theta_" : "vartheta_"; }

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string l2_convention(const ExperimentConfig& config) {
  return config.l2_window ? "windowed mean over final " + format_double(*config.l2_window) + " of records, RMS over seeds"
                          : "final iterate, RMS over seeds";
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw UsageError("write failed for " + path.string());
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "# config_hash=" << hex(trace.config_hash) << "\n";
  out << "# seed=" << trace.seed << "\n";
  if (trace.diverged) out << "# diverged=true\n# diagnostic=" << trace.diagnostic << "\n";
  out << "step,time";
  for (Variant v : trace.variants)
    for (Index a = 0; a < trace.p; ++a) out << ',' << column_prefix(v) << (a + 1);
  out << '\n';
  for (Index r = 0; r < trace.rows(); ++r) {
    out << trace.steps[static_cast<std::size_t>(r)] << ',' << format_double(trace.times[static_cast<std::size_t>(r)]);
    for (Index c = 0; c < trace.values.cols(); ++c) out << ',' << format_double(trace.values(r, c));
    out << '\n';
  }
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_trace_csv(trace, out);
  finish(out, path);
}

void write_sweep_csv(const SweepSummary& summary, const ExperimentConfig& config, std::ostream& out) {
  out << "# config_hash=" << hex(config_hash(config)) << "\n";
  out << "# l2_error=" << l2_convention(config) << "\n";
  Index p = summary.rows.empty() ? 0 : summary.rows.front().error.size();
  out << "axis,value,variant";
  for (Index a = 0; a < p; ++a) out << ",err_" << (a + 1);
  out << '\n';
  for (const auto& row : summary.rows) {
    out << summary.axis << ',' << row.value << ',' << to_string(row.variant);
    for (Index a = 0; a < row.error.size(); ++a) out << ',' << format_double(row.error[a]);
    out << '\n';
  }
}

void write_long_csv(const std::vector<RunTrace>& traces, std::ostream& out) {
  out << "seed,step,time,variant,coordinate,value\n";
  for (const auto& tr : traces) {
    for (Index r = 0; r < tr.rows(); ++r) {
      for (std::size_t v = 0; v < tr.variants.size(); ++v) {
        for (Index a = 0; a < tr.p; ++a) {
          out << tr.seed << ',' << tr.steps[static_cast<std::size_t>(r)] << ','
              << format_double(tr.times[static_cast<std::size_t>(r)]) << ',' << to_string(tr.variants[v]) << ','
              << (a + 1) << ',' << format_double(tr.values(r, static_cast<Index>(v) * tr.p + a)) << '\n';
        }
      }
    }
  }
}

void write_run_summary_csv(const std::vector<RunTrace>& traces, const ExperimentConfig& config, std::ostream& out) {
  if (traces.empty()) throw UsageError("no traces to summarise");
  const ParamVec target = resolve_target(config);
  out << "# config_hash=" << hex(config_hash(config)) << "\n";
  out << "# l2_error=" << l2_convention(config) << "\n";
  out << "kind,seed,variant,diverged";
  for (Index a = 0; a < target.size(); ++a) out << ",value_" << (a + 1);
  out << '\n';
  for (const auto& tr : traces) {
    for (std::size_t v = 0; v < tr.variants.size(); ++v) {
      out << "final," << tr.seed << ',' << to_string(tr.variants[v]) << ',' << (tr.diverged ? 1 : 0);
      const ParamVec th = tr.final_theta(static_cast<Index>(v));
      for (Index a = 0; a < th.size(); ++a) out << ',' << format_double(th[a]);
      out << '\n';
    }
  }
  out << "target,,,";
  for (Index a = 0; a < target.size(); ++a) out << ',' << format_double(target[a]);
  out << '\n';
  const auto& variants = traces.front().variants;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const ParamVec err = l2_error(traces, target, static_cast<Index>(v), config.l2_window);
    out << "l2_error,," << to_string(variants[v]) << ',';
    for (Index a = 0; a < err.size(); ++a) out << ',' << format_double(err[a]);
    out << '\n';
  }
}

std::vector<std::string> figure_ids() {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < detail::kPresetCount; ++i) ids.emplace_back(detail::kPresets[i].id);
  return ids;
}

ExperimentConfig figure_preset(std::string_view id) {
  for (std::size_t i = 0; i < detail::kPresetCount; ++i) {
    if (id == detail::kPresets[i].id) return parse_config(detail::kPresets[i].json, std::string("preset ") + std::string(id));
  }
  throw UsageError("unknown figure id \"" + std::string(id) + "\"");
}

void write_run_outputs(const std::vector<RunTrace>& traces, const ExperimentConfig& config,
                       const std::filesystem::path& out_dir) {
  for (const auto& tr : traces) write_trace_csv(tr, out_dir / ("trace_seed" + std::to_string(tr.seed) + ".csv"));
  {
    const auto path = out_dir / "summary.csv";
    auto out = open_out(path);
    write_run_summary_csv(traces, config, out);
    finish(out, path);
  }
  {
    const auto path = out_dir / "long.csv";
    auto out = open_out(path);
    write_long_csv(traces, out);
    finish(out, path);
  }
  {
    const auto path = out_dir / "config.json";
    auto out = open_out(path);
    out << serialize_config(config) << '\n';
    finish(out, path);
  }
}

void write_sweep_outputs(const SweepSummary& summary, const ExperimentConfig& config,
                         const std::filesystem::path& out_dir) {
  for (std::size_t vi = 0; vi < summary.values.size(); ++vi) {
    const std::string tag = summary.axis + std::to_string(summary.values[vi]);
    for (const auto& tr : summary.traces[vi]) {
      write_trace_csv(tr, out_dir / ("trace_" + tag + "_seed" + std::to_string(tr.seed) + ".csv"));
    }
    const auto path = out_dir / ("long_" + tag + ".csv");
    auto out = open_out(path);
    write_long_csv(summary.traces[vi], out);
    finish(out, path);
  }
  {
    const auto path = out_dir / "summary.csv";
    auto out = open_out(path);
    write_sweep_csv(summary, config, out);
    finish(out, path);
  }
  {
    const auto path = out_dir / "config.json";
    auto out = open_out(path);
    out << serialize_config(config) << '\n';
    finish(out, path);
  }
}

bool any_diverged(const std::vector<RunTrace>& traces) {
  return std::any_of(traces.begin(), traces.end(), [](const RunTrace& t) { return t.diverged; });
}

bool replicate_figure(std::string_view id, const std::filesystem::path& out_dir, double scale) {
  const ExperimentConfig config = scale_config(figure_preset(id), scale);
  if (config.sweep) {
    const SweepSummary summary = sweep(config, config.sweep->axis, config.sweep->values);
    write_sweep_outputs(summary, config, out_dir);
    return std::any_of(summary.traces.begin(), summary.traces.end(), any_diverged);
  }
  const auto traces = run_experiment(config);
  write_run_outputs(traces, config, out_dir);
  return any_diverged(traces);
}

}  // namespace vpsgd
