#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "p2emec/checkpoint.hpp"
#include "p2emec/config.hpp"
#include "p2emec/harness.hpp"
#include "p2emec/text.hpp"
#include "p2emec/trainers.hpp"

namespace {

using namespace p2emec;

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("P2EMEC_OUT_DIR")) return env;
    return "out";
}

// Shared --config / --set handling.
struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;

    Config resolve() const {
        Config cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            apply_override(cfg, std::string(trim(kv.substr(0, eq))),
                           std::string(trim(kv.substr(eq + 1))));
        }
        cfg.net.validate();
        cfg.train.validate();
        return cfg;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key = value config file");
        cmd->add_option("--set", overrides, "override a config key, e.g. --set weight_q=0.25")
            ->take_all();
    }
};

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> out;
    for (const auto& part : split(csv, ',')) out.push_back(parse_double(part));
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split(csv, ',')) {
        const long long v = parse_int(part);
        if (v < 0) throw std::invalid_argument("seed must be non-negative: " + part);
        out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
}

int cmd_train(const ConfigArgs& cfg_args, const std::string& algo, int mbs, int ues,
              const std::string& seeds, long long steps, const std::string& out, bool trace) {
    ExperimentSpec spec;
    spec.algo = algorithm_from_string(algo);
    spec.base = cfg_args.resolve();
    if (mbs > 0) spec.base.net.m_mbs = mbs;
    if (ues > 0) spec.base.net.n_ues = ues;
    if (steps >= 0) spec.base.train.total_steps = steps;
    spec.seeds = parse_seed_list(seeds);
    spec.out_dir = out;
    spec.trace = trace;
    const auto runs = run_experiment(spec);
    int failures = 0;
    for (const auto& r : runs) {
        std::cout << r.run_id << ": " << r.status;
        if (r.status == "ok")
            std::cout << " (" << r.episodes << " episodes, " << format_double(r.wall_clock_s)
                      << " s)";
        else
            std::cout << " - " << r.error;
        std::cout << '\n';
        if (r.status != "ok") ++failures;
    }
    std::cout << "manifest: " << (spec.out_dir / "manifest.json").string() << '\n';
    return failures == 0 ? 0 : 2;
}

int cmd_sweep(const ConfigArgs& cfg_args, const std::string& algo, const std::string& axis,
              const std::string& values, const std::string& seeds, int mbs, int ues,
              long long steps, double tail, const std::string& out) {
    ExperimentSpec spec;
    spec.algo = algorithm_from_string(algo);
    spec.base = cfg_args.resolve();
    if (mbs > 0) spec.base.net.m_mbs = mbs;
    if (ues > 0) spec.base.net.n_ues = ues;
    if (steps >= 0) spec.base.train.total_steps = steps;
    spec.axis = sweep_axis_from_string(axis);
    spec.values = parse_value_list(values);
    spec.seeds = parse_seed_list(seeds);
    spec.tail_fraction = tail;
    spec.out_dir = out;
    const auto runs = run_experiment(spec);
    int failures = 0;
    for (const auto& r : runs)
        if (r.status != "ok") {
            std::cerr << r.run_id << " failed: " << r.error << '\n';
            ++failures;
        }
    const SweepSummary summary = aggregate_sweep(runs, tail);
    const auto summary_path = spec.out_dir / "sweep_summary.csv";
    write_sweep_summary_csv(summary_path, summary);
    std::cout << "sweep summary: " << summary_path.string() << '\n';
    return failures == 0 ? 0 : 2;
}

int cmd_eval(const ConfigArgs& cfg_args, const std::string& checkpoint, long long episodes,
             std::uint64_t seed, const std::string& out_csv) {
    Config cfg = cfg_args.resolve();
    // The stored tag names the algorithm and decides the critic shapes.
    ModelSet ms = make_models(Algorithm::mals, cfg.net, cfg.train);
    std::string tag;
    try {
        ParamRefs refs = ms.checkpoint_params();
        tag = load_checkpoint(checkpoint, refs);
    } catch (const std::exception&) {
        // Shapes differ per algorithm; retry with the baseline layouts.
        bool loaded = false;
        for (Algorithm algo : {Algorithm::ida, Algorithm::ctde}) {
            ms = make_models(algo, cfg.net, cfg.train);
            ParamRefs refs = ms.checkpoint_params();
            try {
                tag = load_checkpoint(checkpoint, refs);
                loaded = true;
                break;
            } catch (const std::exception&) {
            }
        }
        if (!loaded) throw std::runtime_error("checkpoint does not match the configured model shapes");
    }
    const auto records = evaluate_policy(cfg.net, ms.dl_actor, ms.ul_actor, episodes, seed);
    write_metrics_csv(out_csv, records);
    double total = 0.0;
    for (const auto& r : records) total += r.dl_reward_sum + r.ul_reward_sum;
    std::cout << "evaluated " << records.size() << " episodes (" << tag
              << " policy), mean episodic reward " << format_double(total / records.size())
              << ", metrics: " << out_csv << '\n';
    return 0;
}

int cmd_oracle(const ConfigArgs& cfg_args, int mbs, int ues, std::uint64_t seed,
               const std::string& out_csv) {
    Config cfg = cfg_args.resolve();
    if (mbs > 0) cfg.net.m_mbs = mbs;
    if (ues > 0) cfg.net.n_ues = ues;
    cfg.net.validate();
    MecEnv env(cfg.net, seed);
    const OracleResult result =
        brute_force_allocation_oracle(env.world(), cfg.net, RewardWeights::from(cfg.net));
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_csv);
    out << "alloc,dl_utility\n";
    for (const auto& entry : result.table) {
        std::string alloc_str;
        for (std::size_t i = 0; i < entry.alloc.size(); ++i) {
            if (i) alloc_str += ' ';
            alloc_str += std::to_string(entry.alloc[i]);
        }
        out << alloc_str << ',' << format_double(entry.utility) << '\n';
    }
    std::string best;
    for (std::size_t i = 0; i < result.best_alloc.size(); ++i) {
        if (i) best += ' ';
        best += std::to_string(result.best_alloc[i]);
    }
    std::cout << "best allocation: [" << best << "] utility " << format_double(result.best_utility)
              << " (" << result.table.size() << " allocations, table: " << out_csv << ")\n";
    return 0;
}

int cmd_aggregate(const std::string& manifest, double tail, const std::string& out_csv) {
    const auto runs = read_manifest(manifest);
    const SweepSummary summary = aggregate_sweep(runs, tail);
    write_sweep_summary_csv(out_csv, summary);
    for (const auto& id : summary.missing_runs)
        std::cerr << "warning: missing or failed run " << id << '\n';
    std::cout << "aggregated " << runs.size() << " runs into " << out_csv;
    if (!summary.missing_runs.empty())
        std::cout << " (" << summary.missing_runs.size() << " missing, partial aggregation)";
    std::cout << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Play-to-earn mobile-edge-computing simulator and multi-agent PPO trainer"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train one algorithm across seeds");
    ConfigArgs train_cfg;
    std::string train_algo = "mals", train_seeds = "0", train_out = default_out_dir().string();
    int train_mbs = 0, train_ues = 0;
    long long train_steps = -1;
    bool train_trace = false;
    train->add_option("--algo", train_algo, "mals|ida|ctde|random")->capture_default_str();
    train->add_option("--mbs", train_mbs, "number of MBSs (overrides config)");
    train->add_option("--ues", train_ues, "number of UEs (overrides config)");
    train->add_option("--seed", train_seeds, "comma-separated seed list")->capture_default_str();
    train->add_option("--steps", train_steps, "total environment iterations");
    train->add_option("--out", train_out, "output directory")->capture_default_str();
    train->add_flag("--trace", train_trace, "write per-phase environment traces");
    train_cfg.attach(train);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "weight sweep over q or h");
    ConfigArgs sweep_cfg;
    std::string sweep_algo = "mals", sweep_axis, sweep_values = "0,0.25,0.5,0.75,1",
                sweep_seeds = "0", sweep_out = default_out_dir().string();
    int sweep_mbs = 0, sweep_ues = 0;
    long long sweep_steps = -1;
    double sweep_tail = 0.1;
    sweep->add_option("--algo", sweep_algo, "mals|ida|ctde|random")->capture_default_str();
    sweep->add_option("--axis", sweep_axis, "q or h")->required();
    sweep->add_option("--values", sweep_values, "comma-separated weight values in [0,1]")
        ->capture_default_str();
    sweep->add_option("--seeds", sweep_seeds, "comma-separated seed list")->capture_default_str();
    sweep->add_option("--mbs", sweep_mbs, "number of MBSs (overrides config)");
    sweep->add_option("--ues", sweep_ues, "number of UEs (overrides config)");
    sweep->add_option("--steps", sweep_steps, "total environment iterations per run");
    sweep->add_option("--tail", sweep_tail, "tail fraction for the summary")->capture_default_str();
    sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();
    sweep_cfg.attach(sweep);

    // eval
    auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    ConfigArgs eval_cfg;
    std::string eval_checkpoint, eval_out = "eval_metrics.csv";
    long long eval_episodes = 10;
    long long eval_seed = 0;
    eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    eval->add_option("--episodes", eval_episodes, "episodes to run")->capture_default_str();
    eval->add_option("--seed", eval_seed, "environment seed")->capture_default_str();
    eval->add_option("--out", eval_out, "metrics CSV path")->capture_default_str();
    eval_cfg.attach(eval);

    // oracle
    auto* oracle = app.add_subcommand("oracle", "brute-force allocation search on a tiny instance");
    ConfigArgs oracle_cfg;
    std::string oracle_out = "oracle_table.csv";
    int oracle_mbs = 0, oracle_ues = 0;
    long long oracle_seed = 0;
    oracle->add_option("--mbs", oracle_mbs, "number of MBSs (overrides config)");
    oracle->add_option("--ues", oracle_ues, "number of UEs (overrides config)");
    oracle->add_option("--seed", oracle_seed, "world seed")->capture_default_str();
    oracle->add_option("--out", oracle_out, "utility table CSV path")->capture_default_str();
    oracle_cfg.attach(oracle);

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "tail-mean summary of a finished campaign");
    std::string agg_manifest, agg_out = "sweep_summary.csv";
    double agg_tail = 0.1;
    aggregate->add_option("--manifest", agg_manifest, "manifest.json of the campaign")->required();
    aggregate->add_option("--tail", agg_tail, "tail fraction")->capture_default_str();
    aggregate->add_option("--out", agg_out, "summary CSV path")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (train->parsed())
            return cmd_train(train_cfg, train_algo, train_mbs, train_ues, train_seeds, train_steps,
                             train_out, train_trace);
        if (sweep->parsed())
            return cmd_sweep(sweep_cfg, sweep_algo, sweep_axis, sweep_values, sweep_seeds,
                             sweep_mbs, sweep_ues, sweep_steps, sweep_tail, sweep_out);
        if (eval->parsed())
            return cmd_eval(eval_cfg, eval_checkpoint, eval_episodes,
                            static_cast<std::uint64_t>(eval_seed), eval_out);
        if (oracle->parsed())
            return cmd_oracle(oracle_cfg, oracle_mbs, oracle_ues,
                              static_cast<std::uint64_t>(oracle_seed), oracle_out);
        if (aggregate->parsed()) return cmd_aggregate(agg_manifest, agg_tail, agg_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
