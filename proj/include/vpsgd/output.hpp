#pragma once

#include "vpsgd/config.hpp"
#include "vpsgd/experiment.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace vpsgd {

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

/// "step,time,theta_1,..,theta_p[,vartheta_1,..]" preceded by '#' metadata lines.
void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);

/// "axis,value,variant,err_1,..,err_p".
void write_sweep_csv(const SweepSummary& summary, const ExperimentConfig& config, std::ostream& out);

/// Long format: "seed,step,time,variant,coordinate,value".
void write_long_csv(const std::vector<RunTrace>& traces, std::ostream& out);

/// Per-seed final estimates plus an L2 row per variant.
void write_run_summary_csv(const std::vector<RunTrace>& traces, const ExperimentConfig& config, std::ostream& out);

/// Known figure ids, fig1a .. fig6c.
std::vector<std::string> figure_ids();

/// Built-in configuration for a figure id.
ExperimentConfig figure_preset(std::string_view id);

/// Runs a figure preset (optionally shrunk by `scale`) and writes one trace
/// per seed, a summary and a long-format file under `out_dir`. Returns true
/// when any run diverged.
bool replicate_figure(std::string_view id, const std::filesystem::path& out_dir, double scale = 1.0);

bool any_diverged(const std::vector<RunTrace>& traces);

/// Writes traces, summary and long file for a finished plain run.
void write_run_outputs(const std::vector<RunTrace>& traces, const ExperimentConfig& config,
                       const std::filesystem::path& out_dir);

/// Same for a sweep.
void write_sweep_outputs(const SweepSummary& summary, const ExperimentConfig& config,
                         const std::filesystem::path& out_dir);

}  // namespace vpsgd
