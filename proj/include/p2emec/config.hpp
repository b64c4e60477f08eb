#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace p2emec {

// Scenario constants for the play-to-earn edge-computing simulation.
// Defaults follow the journal experiment setup; values the experiments never
// pin down (noise floor interpretation, reference gain, uplink data sizes,
// initial battery) are documented calibration choices and stay configurable.
struct NetworkConfig {
    int n_ues = 6;    // N
    int m_mbs = 4;    // M
    int t_steps = 100;  // transmission iterations per episode (T)

    double area_x_max = 100.0;  // m
    double area_y_max = 100.0;  // m
    double step_x_max = 10.0;   // max per-iteration move, x (m)
    double step_y_max = 10.0;   // max per-iteration move, y (m)

    double bandwidth_hz = 1e10;    // per-MBS bandwidth B_v
    double noise_psd_dl = 1e-13;   // W/Hz at the UE receiver (-100 dBm/Hz)
    double noise_psd_ul = 1e-13;   // W/Hz at the MBS receiver

    double p_dl_min = 1.5;   // W, MBS per-UE downlink power range
    double p_dl_max = 2.0;
    double p_ul_min = 3.0;   // W, UE uplink power range
    double p_ul_max = 10.0;

    double dl_data_min = 8e8;  // bits, in-game scene size range (D)
    double dl_data_max = 1e9;
    double ul_data_min = 8e7;  // bits, scene-change upload range (F)
    double ul_data_max = 1e8;

    double battery_init = 10.0;  // J per UE (Bat^0)

    double profitability = 10.0;  // P in the earning-potential function
    double scale_b = 1.0;         // b, unit-matching factor (downlink)
    double scale_f = 1.0;         // f, unit-matching factor (uplink)
    double weight_q = 0.5;        // q in [0,1], downlink latency weight
    double weight_h = 0.5;        // h in [0,1], uplink latency weight
    double weight_w1 = 1.0;       // w1, downlink utility weight in the overall objective
    double weight_w2 = 1.0;       // w2, uplink utility weight
    double kappa1 = 0.5;          // critic loss weight, uplink head
    double kappa2 = 0.5;          // critic loss weight, downlink head
    double varkappa = 0.3;        // uplink-reward share mixed into the downlink reward
    double penalty = -50.0;       // depletion penalty issued to both agents

    double rician_k = 3.0;        // Rician K factor
    double pathloss_alpha = 2.0;  // path-loss exponent
    double beta0 = 1e-2;          // channel gain at the 1 m reference distance

    // Use the uplink reward exactly as printed (+min cumulative consumption)
    // instead of the objective-consistent form (-max cumulative consumption).
    bool literal_ul_reward = false;

    // Restore the first sampled world on every reset (fixed-instance studies).
    bool frozen_world = false;

    // Throws std::invalid_argument naming the offending key and bound.
    void validate() const;
};

// Training hyperparameters. The source experiments do not state these; the
// defaults are ordinary desk-scale PPO settings and are not presented as
// anything else.
struct TrainConfig {
    long long total_steps = 50000;  // environment iterations to train for
    int horizon = 2048;             // trajectory length per update
    int epochs = 10;                // optimization epochs per update (K)
    int group_size = 64;            // minibatch size
    double gamma = 0.99;
    double lambda_gae = 0.95;
    double clip_eps = 0.2;
    double lr_actor = 3e-4;
    double lr_critic = 1e-3;
    int target_sync_interval = 4;   // update rounds between target syncs (C)
    double gaussian_logstd_init = -0.5;
    std::vector<int> hidden_sizes = {64, 64};
    bool normalize_advantages = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Config {
    NetworkConfig net;
    TrainConfig train;
};

NetworkConfig default_network_config();
TrainConfig default_train_config();

// Flat key = value text format. '#' starts a comment; unknown keys are
// rejected. Every key is optional and defaults as above.
Config parse_config_text(const std::string& text);
Config load_config_file(const std::filesystem::path& path);

// Apply one "key=value" override (the CLI --set flag).
void apply_override(Config& cfg, const std::string& key, const std::string& value);

// Full serialization: every key, round-trip exact numeric formatting.
std::string serialize_config(const Config& cfg);

// FNV-1a hash of the serialized config, hex string; identifies a resolved run.
std::string config_hash(const Config& cfg);

}  // namespace p2emec
