#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gcfed/config.hpp"
#include "gcfed/fl.hpp"

namespace gcfed {

/// Accuracy statistics written to summary.json. All fields are unset when the
/// run has fewer than two evaluated rounds.
struct RunSummary {
    std::optional<double> mean_diff;
    std::optional<double> std_diff;
    std::optional<double> min_diff;
    std::optional<double> peak_smoothed_accuracy;
    std::optional<double> final_smoothed_accuracy;
};

inline constexpr std::size_t kSmoothingWindow = 10;

RunSummary summarize(std::span<const RoundRecord> records, std::size_t window = kSmoothingWindow);

/// Column order of rounds.csv.
inline constexpr const char* kRoundsCsvHeader = "t,accuracy,update_norm,discrepancy,failed_flag";

std::string rounds_csv_row(const RoundRecord& rec);
std::string rounds_csv(std::span<const RoundRecord> records);
std::string round_jsonl(const RoundRecord& rec);
std::string summary_json(const RunSummary& s);

/// --out if given, else $GCFED_OUT, else ./runs.
std::filesystem::path output_root(const std::optional<std::string>& cli_out);

/// Creates `<root>/<stamp>-<label>`, adding a numeric suffix if the name is taken.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& label);

/// Config with lambda resolved, as echoed into config.resolved.
ExperimentConfig resolved_config(const ExperimentConfig& cfg, double resolved_lambda);

struct SimulationOutcome {
    std::filesystem::path run_dir;
    ExperimentResult result;
    RunSummary summary;
};

/// Runs the experiment and writes rounds.csv, rounds.jsonl, summary.json,
/// config.resolved and run.log into `run_dir` (created if missing).
SimulationOutcome simulate_to(const ExperimentConfig& cfg, const std::filesystem::path& run_dir,
                              std::ostream* progress = nullptr);

struct GridSpec {
    std::string key;
    std::vector<std::string> values;
};

/// Parses "key=v1,v2,...".
GridSpec parse_grid(const std::string& text);

struct SweepRow {
    std::string value;
    std::uint64_t seed = 0;
    std::filesystem::path run_dir;
    RunSummary summary;
    std::size_t failed_rounds = 0;
};

/// One run per (grid value, seed offset in [0, seeds)) under `sweep_dir`, plus
/// comparison.csv merging the summaries.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const GridSpec& grid, std::size_t seeds,
                                const std::filesystem::path& sweep_dir, std::ostream* progress = nullptr);

/// RFC-4180 quoting when the field needs it.
std::string csv_field(const std::string& s);

}  // namespace gcfed
