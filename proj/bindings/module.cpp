#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <sstream>

#include "p2emec/channel.hpp"
#include "p2emec/config.hpp"
#include "p2emec/env.hpp"
#include "p2emec/harness.hpp"
#include "p2emec/metrics.hpp"
#include "p2emec/reward.hpp"
#include "p2emec/rng.hpp"
#include "p2emec/trainers.hpp"

namespace py = pybind11;
using namespace p2emec;

namespace {

py::dict metrics_to_dict(const MetricsRecord& r) {
    py::dict d;
    d["episode"] = r.episode;
    d["steps"] = r.steps;
    d["depleted"] = r.depleted;
    d["avg_dl_delay_s"] = r.avg_dl_delay;
    d["avg_ul_delay_s"] = r.avg_ul_delay;
    d["min_cum_earning"] = r.min_cum_earning;
    d["mean_cum_earning"] = r.mean_cum_earning;
    d["max_cum_battery_pct"] = r.max_cum_battery_pct;
    d["mean_cum_battery_pct"] = r.mean_cum_battery_pct;
    d["dl_reward_sum"] = r.dl_reward_sum;
    d["ul_reward_sum"] = r.ul_reward_sum;
    return d;
}

py::list metrics_to_list(const std::vector<MetricsRecord>& records) {
    py::list out;
    for (const auto& r : records) out.append(metrics_to_dict(r));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Play-to-earn MEC wireless simulator with multi-agent loss-sharing PPO";

    py::class_<NetworkConfig>(m, "NetworkConfig")
        .def(py::init<>())
        .def_readwrite("n_ues", &NetworkConfig::n_ues)
        .def_readwrite("m_mbs", &NetworkConfig::m_mbs)
        .def_readwrite("t_steps", &NetworkConfig::t_steps)
        .def_readwrite("area_x_max", &NetworkConfig::area_x_max)
        .def_readwrite("area_y_max", &NetworkConfig::area_y_max)
        .def_readwrite("step_x_max", &NetworkConfig::step_x_max)
        .def_readwrite("step_y_max", &NetworkConfig::step_y_max)
        .def_readwrite("bandwidth_hz", &NetworkConfig::bandwidth_hz)
        .def_readwrite("noise_psd_dl", &NetworkConfig::noise_psd_dl)
        .def_readwrite("noise_psd_ul", &NetworkConfig::noise_psd_ul)
        .def_readwrite("p_dl_min", &NetworkConfig::p_dl_min)
        .def_readwrite("p_dl_max", &NetworkConfig::p_dl_max)
        .def_readwrite("p_ul_min", &NetworkConfig::p_ul_min)
        .def_readwrite("p_ul_max", &NetworkConfig::p_ul_max)
        .def_readwrite("dl_data_min", &NetworkConfig::dl_data_min)
        .def_readwrite("dl_data_max", &NetworkConfig::dl_data_max)
        .def_readwrite("ul_data_min", &NetworkConfig::ul_data_min)
        .def_readwrite("ul_data_max", &NetworkConfig::ul_data_max)
        .def_readwrite("battery_init", &NetworkConfig::battery_init)
        .def_readwrite("profitability", &NetworkConfig::profitability)
        .def_readwrite("scale_b", &NetworkConfig::scale_b)
        .def_readwrite("scale_f", &NetworkConfig::scale_f)
        .def_readwrite("weight_q", &NetworkConfig::weight_q)
        .def_readwrite("weight_h", &NetworkConfig::weight_h)
        .def_readwrite("weight_w1", &NetworkConfig::weight_w1)
        .def_readwrite("weight_w2", &NetworkConfig::weight_w2)
        .def_readwrite("kappa1", &NetworkConfig::kappa1)
        .def_readwrite("kappa2", &NetworkConfig::kappa2)
        .def_readwrite("varkappa", &NetworkConfig::varkappa)
        .def_readwrite("penalty", &NetworkConfig::penalty)
        .def_readwrite("rician_k", &NetworkConfig::rician_k)
        .def_readwrite("pathloss_alpha", &NetworkConfig::pathloss_alpha)
        .def_readwrite("beta0", &NetworkConfig::beta0)
        .def_readwrite("literal_ul_reward", &NetworkConfig::literal_ul_reward)
        .def_readwrite("frozen_world", &NetworkConfig::frozen_world)
        .def("validate", &NetworkConfig::validate);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("total_steps", &TrainConfig::total_steps)
        .def_readwrite("horizon", &TrainConfig::horizon)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("group_size", &TrainConfig::group_size)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("lambda_gae", &TrainConfig::lambda_gae)
        .def_readwrite("clip_eps", &TrainConfig::clip_eps)
        .def_readwrite("lr_actor", &TrainConfig::lr_actor)
        .def_readwrite("lr_critic", &TrainConfig::lr_critic)
        .def_readwrite("target_sync_interval", &TrainConfig::target_sync_interval)
        .def_readwrite("gaussian_logstd_init", &TrainConfig::gaussian_logstd_init)
        .def_readwrite("hidden_sizes", &TrainConfig::hidden_sizes)
        .def_readwrite("normalize_advantages", &TrainConfig::normalize_advantages)
        .def_readwrite("seed", &TrainConfig::seed)
        .def("validate", &TrainConfig::validate);

    m.def("default_network_config", &default_network_config);
    m.def("default_train_config", &default_train_config);
    m.def("load_config_file", [](const std::string& path) {
        const Config cfg = load_config_file(path);
        return py::make_tuple(cfg.net, cfg.train);
    });
    m.def("parse_config_text", [](const std::string& text) {
        const Config cfg = parse_config_text(text);
        return py::make_tuple(cfg.net, cfg.train);
    });

    py::class_<DlOutcome>(m, "DlOutcome")
        .def_readonly("rates", &DlOutcome::rates)
        .def_readonly("latencies", &DlOutcome::latencies)
        .def_readonly("earnings", &DlOutcome::earnings);

    py::class_<UlOutcome>(m, "UlOutcome")
        .def_readonly("rates", &UlOutcome::rates)
        .def_readonly("latencies", &UlOutcome::latencies)
        .def_readonly("energies", &UlOutcome::energies)
        .def_readonly("q_fractions", &UlOutcome::q_fractions);

    py::class_<MecEnv>(m, "MecEnv")
        .def(py::init<NetworkConfig, std::uint64_t>(), py::arg("config"), py::arg("seed"))
        .def("reset", &MecEnv::reset)
        .def("dl_observation", &MecEnv::dl_observation)
        .def("ul_observation", &MecEnv::ul_observation)
        .def("step_downlink", &MecEnv::step_downlink, py::arg("alloc"))
        .def(
            "step_uplink",
            [](MecEnv& env, const std::vector<double>& powers) {
                const MecEnv::UlStepResult r = env.step_uplink(powers);
                return py::make_tuple(r.outcome, r.done, r.depleted);
            },
            py::arg("ul_powers"))
        .def_property_readonly("step", [](const MecEnv& env) { return env.world().step; })
        .def_property_readonly("done", [](const MecEnv& env) { return env.world().done; })
        .def_property_readonly("batteries", [](const MecEnv& env) {
            std::vector<double> b(env.config().n_ues);
            for (int i = 0; i < env.config().n_ues; ++i) b[i] = env.world().battery(i);
            return b;
        });

    m.def("earning_potential", &earning_potential, py::arg("rate_bps"), py::arg("profitability"));

    m.def(
        "compute_gae",
        [](const std::vector<double>& rewards, const std::vector<double>& values,
           const std::vector<double>& next_values, const std::vector<bool>& dones, double gamma,
           double lam) {
            std::vector<std::uint8_t> d(dones.size());
            for (std::size_t i = 0; i < dones.size(); ++i) d[i] = dones[i] ? 1 : 0;
            const GaeResult r = compute_gae(rewards, values, next_values, d, gamma, lam);
            return py::make_tuple(r.advantages, r.value_targets);
        },
        py::arg("rewards"), py::arg("values"), py::arg("next_values"), py::arg("dones"),
        py::arg("gamma"), py::arg("lambda_gae"));

    m.def(
        "train",
        [](const std::string& algo, const NetworkConfig& net, const TrainConfig& train) {
            const TrainResult result = train_algorithm(algorithm_from_string(algo), net, train);
            py::dict out;
            out["episodes"] = metrics_to_list(result.log.episodes);
            out["updates"] = static_cast<long long>(result.log.updates.size());
            out["wall_clock_s"] = result.log.wall_clock_s;
            return out;
        },
        py::arg("algo"), py::arg("network_config"), py::arg("train_config"),
        "Train one algorithm (mals|ida|ctde) and return its episode metrics.");

    m.def(
        "run_random",
        [](const NetworkConfig& net, long long episodes, std::uint64_t seed) {
            return metrics_to_list(run_random(net, episodes, seed));
        },
        py::arg("network_config"), py::arg("episodes"), py::arg("seed"));

    m.def(
        "allocation_oracle",
        [](const NetworkConfig& net, std::uint64_t seed) {
            MecEnv env(net, seed);
            const OracleResult r =
                brute_force_allocation_oracle(env.world(), net, RewardWeights::from(net));
            py::list table;
            for (const auto& e : r.table) table.append(py::make_tuple(e.alloc, e.utility));
            py::dict out;
            out["best_alloc"] = r.best_alloc;
            out["best_utility"] = r.best_utility;
            out["table"] = table;
            return out;
        },
        py::arg("network_config"), py::arg("seed"),
        "Exhaustive one-step allocation search on a freshly sampled world.");

    m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
        return spearman_rank_correlation(x, y);
    });
}
