#pragma once

#include <vector>

#include "p2emec/config.hpp"

namespace p2emec {

struct DlOutcome;
struct UlOutcome;

// Weights entering the rewards and utilities, mirrored from NetworkConfig.
struct RewardWeights {
    double q = 0.5;
    double h = 0.5;
    double b = 1.0;
    double f = 1.0;
    double profitability = 10.0;
    double w1 = 1.0;
    double w2 = 1.0;
    double varkappa = 0.3;
    double penalty = -50.0;
    bool literal_ul_reward = false;

    static RewardWeights from(const NetworkConfig& cfg);
};

// Resolution-influenced earning potential, P * ln(1 + rate). Increasing and
// concave in the rate.
double earning_potential(double rate_bps, double profitability);

// Per-episode bookkeeping of latencies, earnings, and battery percentages.
// One complete iteration = one record_dl followed by one record_ul.
class EpisodeLedger {
public:
    explicit EpisodeLedger(int n_ues);

    void record_dl(const DlOutcome& out);
    void record_ul(const UlOutcome& out);
    void mark_depleted() { depleted_ = true; }

    int n_ues() const { return n_; }
    int steps() const { return steps_; }  // complete iterations recorded
    bool depleted() const { return depleted_; }
    bool step_complete() const { return !ul_pending_; }

    // Terms of the current step's rewards (latest complete iteration).
    double last_dl_latency_mean() const;
    double last_ul_latency_mean() const;
    double min_cum_earning() const;
    double mean_cum_earning() const;
    double min_cum_q() const;
    double max_cum_q() const;
    double mean_cum_q() const;

    // Episode totals over all recorded iterations.
    double total_dl_latency() const { return total_dl_latency_; }
    double total_ul_latency() const { return total_ul_latency_; }
    const std::vector<double>& cum_earning() const { return cum_earning_; }
    const std::vector<double>& cum_q() const { return cum_q_; }

private:
    void require_complete_step() const;

    int n_ = 0;
    int steps_ = 0;
    bool ul_pending_ = false;
    bool depleted_ = false;
    double total_dl_latency_ = 0.0;
    double total_ul_latency_ = 0.0;
    double last_dl_latency_sum_ = 0.0;
    double last_ul_latency_sum_ = 0.0;
    std::vector<double> cum_earning_;  // per UE, sum of omega over steps
    std::vector<double> cum_q_;        // per UE, cumulative battery percentage
};

// Per-step uplink reward. Default mode penalizes the worst-case cumulative
// battery expenditure; literal mode keeps the printed +min variant. Depletion
// replaces the reward with the penalty.
double uplink_reward(const EpisodeLedger& ledger, const RewardWeights& w, bool depleted);

// Per-step downlink reward; embeds varkappa times the same step's uplink
// reward, so it is finalized after the uplink phase.
double downlink_reward(const EpisodeLedger& ledger, const RewardWeights& w, bool depleted,
                       double ul_reward_same_step);

// Undecomposed per-step reward used by the centralized-critic baseline:
// the negated per-step terms of the overall objective.
double common_reward(const EpisodeLedger& ledger, const RewardWeights& w, bool depleted);

// Episode-level utilities (values to be minimized) and their weighted sum.
double episode_dl_utility(const EpisodeLedger& ledger, const RewardWeights& w);
double episode_ul_utility(const EpisodeLedger& ledger, const RewardWeights& w);
double overall_objective(const EpisodeLedger& ledger, const RewardWeights& w);

}  // namespace p2emec
