#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "p2emec/config.hpp"
#include "p2emec/env.hpp"
#include "p2emec/metrics.hpp"
#include "p2emec/trainers.hpp"

namespace p2emec {

enum class SweepAxis { none, q, h };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

// A multi-run campaign: one training (or random) run per (seed, sweep value),
// each producing a metrics CSV, a training log, a checkpoint, and a resolved
// config file; a JSON manifest references every emitted file.
struct ExperimentSpec {
    Algorithm algo = Algorithm::mals;
    Config base;
    std::vector<std::uint64_t> seeds = {0};
    SweepAxis axis = SweepAxis::none;
    std::vector<double> values;  // required when axis != none, each in [0,1]
    std::filesystem::path out_dir;
    double tail_fraction = 0.1;
    int threads = 0;  // 0 = hardware concurrency
    bool trace = false;

    void validate() const;
};

struct RunResult {
    std::string run_id;
    Algorithm algo = Algorithm::mals;
    std::uint64_t seed = 0;
    SweepAxis axis = SweepAxis::none;
    double sweep_value = 0.0;  // meaningful when axis != none
    std::string status;        // "ok" or "error"
    std::string error;
    std::string config_hash;
    std::filesystem::path config_file;
    std::filesystem::path metrics_csv;
    std::filesystem::path log_file;
    std::filesystem::path checkpoint;
    std::filesystem::path trace_file;  // empty unless tracing
    long long episodes = 0;
    double wall_clock_s = 0.0;
};

// Executes every run (independent runs fan out across worker threads; each
// run is internally sequential) and writes <out_dir>/manifest.json.
std::vector<RunResult> run_experiment(const ExperimentSpec& spec);

std::vector<RunResult> read_manifest(const std::filesystem::path& manifest_path);

// Tail statistics of one metric across seeds for one sweep value.
struct SweepStat {
    double mean = 0.0;
    double band_min = 0.0;
    double band_max = 0.0;
};

struct SweepSummaryRow {
    double sweep_value = 0.0;
    int runs = 0;
    SweepStat avg_dl_delay;
    SweepStat avg_ul_delay;
    SweepStat min_cum_earning;
    SweepStat max_cum_battery_pct;
    SweepStat dl_reward_sum;
    SweepStat ul_reward_sum;
    SweepStat total_reward_sum;
};

struct SweepSummary {
    std::vector<SweepSummaryRow> rows;
    std::vector<std::string> missing_runs;  // run ids that failed or lack output
};

// Per sweep value: mean over the tail fraction of episodes of each metric,
// averaged per run, then mean and min/max band across seeds.
SweepSummary aggregate_sweep(const std::vector<RunResult>& runs, double tail_fraction);

void write_sweep_summary_csv(const std::filesystem::path& path, const SweepSummary& summary);

// Mean of one metric over the last ceil(tail_fraction * n) episodes.
double tail_mean(const std::vector<MetricsRecord>& records, double tail_fraction,
                 double MetricsRecord::*field);

// Exhaustive search over all M^N allocations of a frozen single-iteration
// world; scores each by the one-step downlink utility (latency mean vs
// worst-case earning). Only usable at tiny scale (M^N <= 4096 enforced).
struct OracleEntry {
    std::vector<int> alloc;
    double utility = 0.0;
};

struct OracleResult {
    std::vector<int> best_alloc;
    double best_utility = 0.0;
    std::vector<OracleEntry> table;  // enumeration order: last UE fastest
};

OracleResult brute_force_allocation_oracle(const WorldState& world, const NetworkConfig& cfg,
                                           const RewardWeights& weights);

// Spearman rank correlation with average ranks on ties.
double spearman_rank_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace p2emec
