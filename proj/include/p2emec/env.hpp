#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "p2emec/channel.hpp"
#include "p2emec/config.hpp"
#include "p2emec/rng.hpp"

namespace p2emec {

// One iteration's downlink results.
struct DlOutcome {
    std::vector<double> rates;      // bits/s
    std::vector<double> latencies;  // s
    std::vector<double> earnings;   // omega(rate)
};

// One iteration's uplink results.
struct UlOutcome {
    std::vector<double> rates;       // bits/s
    std::vector<double> latencies;   // s
    std::vector<double> energies;    // J
    std::vector<double> q_fractions; // percent of initial battery
};

// Mutable per-iteration state of the simulated network.
struct WorldState {
    int step = 1;  // current iteration, 1-based, <= t_steps
    std::vector<Position> ue_positions;
    std::vector<Position> mbs_positions;
    GainMatrix gains;
    std::vector<double> dl_sizes;    // bits (D)
    std::vector<double> ul_sizes;    // bits (F)
    std::vector<double> dl_powers;   // W, per-UE downlink power this iteration
    std::vector<double> cum_energy;  // J spent per UE so far
    std::vector<double> cum_q;       // cumulative battery percentage per UE
    std::vector<double> cum_earning; // cumulative earning potential per UE
    double battery_init = 0.0;
    std::vector<int> alloc;          // UE -> MBS, 0-based; empty before the DL phase
    bool done = false;
    bool depleted = false;

    double battery(int ue) const {
        const double b = battery_init - cum_energy[ue];
        return b > 0.0 ? b : 0.0;
    }
};

// Descending channel-to-noise ordering of the UEs assigned to one MBS;
// ties break toward the lower UE index.
std::vector<int> order_downlink(const GainMatrix& gains, double noise_psd,
                                const std::vector<int>& ue_set, int mbs);

// Descending received-power ordering (p * |g|^2) of the UEs assigned to one
// MBS; ties break toward the lower UE index.
std::vector<int> order_uplink(const std::vector<double>& ul_powers, const GainMatrix& gains,
                              const std::vector<int>& ue_set, int mbs);

// NOMA downlink rate of one UE under the current allocation. Interference
// comes from same-MBS UEs ordered before it, received through its own channel.
double downlink_rate(const WorldState& world, const NetworkConfig& cfg, int ue);

// NOMA uplink rate of one UE. Interference comes from same-MBS UEs ordered
// after it, each received through that UE's own channel.
double uplink_rate(const WorldState& world, const NetworkConfig& cfg,
                   const std::vector<double>& ul_powers, int ue);

double downlink_latency(double size_bits, double rate_bps);

// One mobility move along a single axis: the step is applied, then the result
// clamps to the closed interval [0, bound].
double move_coordinate(double prev, double step, double bound);

struct EnergyAndQ {
    double energy_j;
    double q_percent;
};
EnergyAndQ uplink_energy_and_q(double p_ul, double latency_s, double battery_init);

// Episodic play-to-earn transmission environment. Each iteration runs a
// downlink phase (allocation action) followed by an uplink phase (power
// action); UEs move and iteration inputs are resampled between iterations.
// MBS positions are drawn once per environment and held fixed across resets.
class MecEnv {
public:
    MecEnv(NetworkConfig cfg, std::uint64_t seed);

    // Starts a new episode. In frozen_world mode the first sampled episode
    // state is snapshotted and restored on every subsequent reset.
    void reset();

    const NetworkConfig& config() const { return cfg_; }
    const WorldState& world() const { return world_; }
    bool awaiting_uplink() const { return awaiting_uplink_; }

    // Observation for the allocation agent: normalized |g| (row-major N x M)
    // followed by normalized DL data sizes. Length N*M + N.
    std::vector<double> dl_observation() const;

    // Observation for the power agent: normalized |g| followed by battery
    // fractions. Length N*M + N. Valid once the DL phase of the step is done.
    std::vector<double> ul_observation() const;

    // UL-shaped observation of the upcoming iteration (same layout, no phase
    // guard); used for value bootstrapping between iterations.
    std::vector<double> ul_observation_lookahead() const;

    // Applies the allocation and computes downlink rates/latencies/earnings.
    // Rejects allocations with out-of-range MBS indices.
    DlOutcome step_downlink(const std::vector<int>& alloc);

    struct UlStepResult {
        UlOutcome outcome;
        bool done = false;
        bool depleted = false;
    };
    // Computes uplink results, deducts battery, and either terminates the
    // episode (depletion or horizon) or advances to the next iteration.
    UlStepResult step_uplink(const std::vector<double>& ul_powers);

    // Per-phase JSON-lines trace (optional).
    void set_trace(std::ostream* trace) { trace_ = trace; }

private:
    void sample_iteration_inputs();
    void sample_mobility();
    void trace_dl(const DlOutcome& out) const;
    void trace_ul(const UlOutcome& out) const;

    NetworkConfig cfg_;
    WorldState world_;
    RngStream channel_rng_;
    RngStream mobility_rng_;
    RngStream data_rng_;
    RngStream dl_power_rng_;
    RngStream ue_init_rng_;
    bool awaiting_uplink_ = false;
    std::optional<WorldState> frozen_snapshot_;
    std::ostream* trace_ = nullptr;
};

}  // namespace p2emec
