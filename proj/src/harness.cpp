#include "p2emec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "p2emec/reward.hpp"
#include "p2emec/text.hpp"

namespace p2emec {

using nlohmann::json;

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "none") return SweepAxis::none;
    if (name == "q") return SweepAxis::q;
    if (name == "h") return SweepAxis::h;
    throw std::invalid_argument("unknown sweep axis: '" + name + "' (expected q|h)");
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::none: return "none";
        case SweepAxis::q: return "q";
        case SweepAxis::h: return "h";
    }
    throw std::logic_error("unreachable");
}

void ExperimentSpec::validate() const {
    base.net.validate();
    base.train.validate();
    if (seeds.empty()) throw std::invalid_argument("experiment: seed list must be nonempty");
    if (axis == SweepAxis::none) {
        if (!values.empty()) throw std::invalid_argument("experiment: sweep values given without an axis");
    } else {
        if (values.empty()) throw std::invalid_argument("experiment: sweep axis set but no values");
        for (double v : values)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("experiment: sweep value " + format_double(v) + " out of [0,1]");
    }
    if (tail_fraction <= 0.0 || tail_fraction > 1.0)
        throw std::invalid_argument("experiment: tail_fraction out of (0,1]");
    if (out_dir.empty()) throw std::invalid_argument("experiment: output directory required");
}

namespace {

Config resolve_run_config(const ExperimentSpec& spec, std::uint64_t seed, double sweep_value) {
    Config cfg = spec.base;
    cfg.train.seed = seed;
    // While sweeping one weight the other is held at its midpoint.
    if (spec.axis == SweepAxis::q) {
        cfg.net.weight_q = sweep_value;
        cfg.net.weight_h = 0.5;
    } else if (spec.axis == SweepAxis::h) {
        cfg.net.weight_h = sweep_value;
        cfg.net.weight_q = 0.5;
    }
    return cfg;
}

std::string run_identifier(const ExperimentSpec& spec, std::uint64_t seed, double sweep_value) {
    std::string id = algorithm_name(spec.algo);
    if (spec.axis != SweepAxis::none) {
        id += "_" + sweep_axis_name(spec.axis) + format_double(sweep_value);
    }
    id += "_seed" + std::to_string(seed);
    return id;
}

void execute_run(const ExperimentSpec& spec, RunResult& run, const Config& cfg) {
    std::ofstream log_stream(run.log_file, std::ios::binary);
    if (!log_stream) throw std::runtime_error("cannot open log file: " + run.log_file.string());
    std::ofstream trace_stream;
    TrainHooks hooks;
    hooks.log_stream = &log_stream;
    hooks.checkpoint_path = run.checkpoint;
    if (spec.trace) {
        trace_stream.open(run.trace_file, std::ios::binary);
        if (!trace_stream) throw std::runtime_error("cannot open trace file: " + run.trace_file.string());
        hooks.trace = &trace_stream;
    }

    std::vector<MetricsRecord> episodes;
    if (spec.algo == Algorithm::random_policy) {
        // Match the step budget of the learned runs: enough episodes to cover
        // total_steps iterations at full episode length.
        const long long eps =
            (cfg.train.total_steps + cfg.net.t_steps - 1) / cfg.net.t_steps;
        episodes = run_random(cfg.net, std::max<long long>(eps, 1), cfg.train.seed, hooks);
    } else {
        TrainResult result = train_algorithm(spec.algo, cfg.net, cfg.train, hooks);
        episodes = std::move(result.log.episodes);
    }
    write_metrics_csv(run.metrics_csv, episodes);
    run.episodes = static_cast<long long>(episodes.size());
}

json run_to_json(const RunResult& run) {
    json j;
    j["run_id"] = run.run_id;
    j["algorithm"] = algorithm_name(run.algo);
    j["seed"] = run.seed;
    j["sweep_axis"] = sweep_axis_name(run.axis);
    if (run.axis != SweepAxis::none) j["sweep_value"] = run.sweep_value;
    j["status"] = run.status;
    if (!run.error.empty()) j["error"] = run.error;
    j["config_hash"] = run.config_hash;
    j["config_file"] = run.config_file.filename().string();
    j["metrics_csv"] = run.metrics_csv.filename().string();
    j["log_file"] = run.log_file.filename().string();
    j["checkpoint"] = run.checkpoint.filename().string();
    if (!run.trace_file.empty()) j["trace_file"] = run.trace_file.filename().string();
    j["episodes"] = run.episodes;
    j["wall_clock_s"] = run.wall_clock_s;
    return j;
}

SweepStat stat_over(const std::vector<double>& values) {
    SweepStat s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    s.band_min = *std::min_element(values.begin(), values.end());
    s.band_max = *std::max_element(values.begin(), values.end());
    return s;
}

void append_stat_columns(std::string& row, const SweepStat& s) {
    row += ',';
    row += format_double(s.mean);
    row += ',';
    row += format_double(s.band_min);
    row += ',';
    row += format_double(s.band_max);
}

std::vector<double> ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg_rank;
        i = j + 1;
    }
    return r;
}

}  // namespace

std::vector<RunResult> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);

    std::vector<double> values = spec.values;
    if (spec.axis == SweepAxis::none) values = {0.0};

    struct Job {
        RunResult run;
        Config cfg;
    };
    std::vector<Job> jobs;
    for (double v : values) {
        for (std::uint64_t seed : spec.seeds) {
            Job job;
            job.cfg = resolve_run_config(spec, seed, v);
            RunResult& run = job.run;
            run.run_id = run_identifier(spec, seed, v);
            run.algo = spec.algo;
            run.seed = seed;
            run.axis = spec.axis;
            run.sweep_value = v;
            run.config_hash = config_hash(job.cfg);
            run.config_file = spec.out_dir / (run.run_id + "_config.cfg");
            run.metrics_csv = spec.out_dir / (run.run_id + "_metrics.csv");
            run.log_file = spec.out_dir / (run.run_id + "_log.jsonl");
            run.checkpoint = spec.out_dir / (run.run_id + "_checkpoint.bin");
            if (spec.trace) run.trace_file = spec.out_dir / (run.run_id + "_trace.jsonl");
            jobs.push_back(std::move(job));
        }
    }

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int threads = std::max(1, std::min<int>(spec.threads > 0 ? spec.threads : std::max(hw, 1),
                                                  static_cast<int>(jobs.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) break;
            Job& job = jobs[k];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                std::ofstream cfg_out(job.run.config_file, std::ios::binary);
                cfg_out << serialize_config(job.cfg);
                cfg_out.close();
                execute_run(spec, job.run, job.cfg);
                job.run.status = "ok";
            } catch (const std::exception& e) {
                job.run.status = "error";
                job.run.error = e.what();
            }
            job.run.wall_clock_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json manifest;
    manifest["algorithm"] = algorithm_name(spec.algo);
    manifest["sweep_axis"] = sweep_axis_name(spec.axis);
    manifest["tail_fraction"] = spec.tail_fraction;
    manifest["runs"] = json::array();
    std::vector<RunResult> results;
    for (auto& job : jobs) {
        manifest["runs"].push_back(run_to_json(job.run));
        results.push_back(std::move(job.run));
    }
    std::ofstream mf(spec.out_dir / "manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("cannot write manifest in " + spec.out_dir.string());
    mf << manifest.dump(2) << '\n';
    return results;
}

std::vector<RunResult> read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
    json manifest = json::parse(in);
    const std::filesystem::path dir = manifest_path.parent_path();
    std::vector<RunResult> runs;
    for (const auto& j : manifest.at("runs")) {
        RunResult r;
        r.run_id = j.at("run_id").get<std::string>();
        r.algo = algorithm_from_string(j.at("algorithm").get<std::string>());
        r.seed = j.at("seed").get<std::uint64_t>();
        r.axis = sweep_axis_from_string(j.at("sweep_axis").get<std::string>());
        if (j.contains("sweep_value")) r.sweep_value = j.at("sweep_value").get<double>();
        r.status = j.at("status").get<std::string>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.config_file = dir / j.at("config_file").get<std::string>();
        r.metrics_csv = dir / j.at("metrics_csv").get<std::string>();
        r.log_file = dir / j.at("log_file").get<std::string>();
        r.checkpoint = dir / j.at("checkpoint").get<std::string>();
        if (j.contains("trace_file")) r.trace_file = dir / j.at("trace_file").get<std::string>();
        r.episodes = j.at("episodes").get<long long>();
        r.wall_clock_s = j.at("wall_clock_s").get<double>();
        runs.push_back(std::move(r));
    }
    return runs;
}

double tail_mean(const std::vector<MetricsRecord>& records, double tail_fraction,
                 double MetricsRecord::*field) {
    if (records.empty()) throw std::invalid_argument("tail_mean: no records");
    const std::size_t n = records.size();
    const std::size_t take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
    double sum = 0.0;
    for (std::size_t i = n - take; i < n; ++i) sum += records[i].*field;
    return sum / static_cast<double>(take);
}

SweepSummary aggregate_sweep(const std::vector<RunResult>& runs, double tail_fraction) {
    SweepSummary summary;
    std::vector<double> values;
    for (const auto& r : runs)
        if (std::find(values.begin(), values.end(), r.sweep_value) == values.end())
            values.push_back(r.sweep_value);
    std::sort(values.begin(), values.end());

    for (double v : values) {
        std::vector<double> dl_delay, ul_delay, min_earn, max_bat, dl_rew, ul_rew, total_rew;
        int count = 0;
        for (const auto& r : runs) {
            if (r.sweep_value != v) continue;
            if (r.status != "ok" || !std::filesystem::exists(r.metrics_csv)) {
                summary.missing_runs.push_back(r.run_id);
                continue;
            }
            const std::vector<MetricsRecord> recs = read_metrics_csv(r.metrics_csv);
            if (recs.empty()) {
                summary.missing_runs.push_back(r.run_id);
                continue;
            }
            dl_delay.push_back(tail_mean(recs, tail_fraction, &MetricsRecord::avg_dl_delay));
            ul_delay.push_back(tail_mean(recs, tail_fraction, &MetricsRecord::avg_ul_delay));
            min_earn.push_back(tail_mean(recs, tail_fraction, &MetricsRecord::min_cum_earning));
            max_bat.push_back(tail_mean(recs, tail_fraction, &MetricsRecord::max_cum_battery_pct));
            const double dlr = tail_mean(recs, tail_fraction, &MetricsRecord::dl_reward_sum);
            const double ulr = tail_mean(recs, tail_fraction, &MetricsRecord::ul_reward_sum);
            dl_rew.push_back(dlr);
            ul_rew.push_back(ulr);
            total_rew.push_back(dlr + ulr);
            ++count;
        }
        if (count == 0) continue;
        SweepSummaryRow row;
        row.sweep_value = v;
        row.runs = count;
        row.avg_dl_delay = stat_over(dl_delay);
        row.avg_ul_delay = stat_over(ul_delay);
        row.min_cum_earning = stat_over(min_earn);
        row.max_cum_battery_pct = stat_over(max_bat);
        row.dl_reward_sum = stat_over(dl_rew);
        row.ul_reward_sum = stat_over(ul_rew);
        row.total_reward_sum = stat_over(total_rew);
        summary.rows.push_back(row);
    }
    return summary;
}

void write_sweep_summary_csv(const std::filesystem::path& path, const SweepSummary& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open sweep summary for writing: " + path.string());
    out << "sweep_value,runs";
    for (const char* metric : {"avg_dl_delay_s", "avg_ul_delay_s", "min_cum_earning",
                               "max_cum_battery_pct", "dl_reward_sum", "ul_reward_sum",
                               "total_reward_sum"})
        out << ',' << metric << "_mean," << metric << "_min," << metric << "_max";
    out << '\n';
    for (const auto& row : summary.rows) {
        std::string line = format_double(row.sweep_value);
        line += ',';
        line += std::to_string(row.runs);
        for (const SweepStat* s : {&row.avg_dl_delay, &row.avg_ul_delay, &row.min_cum_earning,
                                   &row.max_cum_battery_pct, &row.dl_reward_sum,
                                   &row.ul_reward_sum, &row.total_reward_sum})
            append_stat_columns(line, *s);
        out << line << '\n';
    }
}

OracleResult brute_force_allocation_oracle(const WorldState& world, const NetworkConfig& cfg,
                                           const RewardWeights& weights) {
    const int n = cfg.n_ues;
    const int m = cfg.m_mbs;
    double combos = 1.0;
    for (int i = 0; i < n; ++i) combos *= m;
    if (combos > 4096.0)
        throw std::invalid_argument("brute_force_allocation_oracle: M^N exceeds 4096");

    WorldState scratch = world;
    OracleResult result;
    std::vector<int> alloc(n, 0);
    const long long total = static_cast<long long>(combos);
    for (long long code = 0; code < total; ++code) {
        long long rest = code;
        for (int i = n - 1; i >= 0; --i) {
            alloc[i] = static_cast<int>(rest % m);
            rest /= m;
        }
        scratch.alloc = alloc;
        double latency_sum = 0.0;
        double min_earning = 0.0;
        for (int i = 0; i < n; ++i) {
            const double rate = downlink_rate(scratch, cfg, i);
            latency_sum += downlink_latency(scratch.dl_sizes[i], rate);
            const double earn = earning_potential(rate, weights.profitability);
            min_earning = (i == 0) ? earn : std::min(min_earning, earn);
        }
        const double utility =
            weights.q * latency_sum / n - (1.0 - weights.q) * weights.b * min_earning;
        result.table.push_back({alloc, utility});
        if (code == 0 || utility < result.best_utility) {
            result.best_utility = utility;
            result.best_alloc = alloc;
        }
    }
    return result;
}

double spearman_rank_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length series of size >= 2");
    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean) * (rx[i] - mean);
        dy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

}  // namespace p2emec
