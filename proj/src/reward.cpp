#include "p2emec/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "p2emec/env.hpp"

namespace p2emec {

RewardWeights RewardWeights::from(const NetworkConfig& cfg) {
    RewardWeights w;
    w.q = cfg.weight_q;
    w.h = cfg.weight_h;
    w.b = cfg.scale_b;
    w.f = cfg.scale_f;
    w.profitability = cfg.profitability;
    w.w1 = cfg.weight_w1;
    w.w2 = cfg.weight_w2;
    w.varkappa = cfg.varkappa;
    w.penalty = cfg.penalty;
    w.literal_ul_reward = cfg.literal_ul_reward;
    return w;
}

double earning_potential(double rate_bps, double profitability) {
    return profitability * std::log1p(rate_bps);
}

EpisodeLedger::EpisodeLedger(int n_ues)
    : n_(n_ues), cum_earning_(n_ues, 0.0), cum_q_(n_ues, 0.0) {
    if (n_ues < 1) throw std::invalid_argument("EpisodeLedger: n_ues must be >= 1");
}

void EpisodeLedger::record_dl(const DlOutcome& out) {
    if (ul_pending_) throw std::logic_error("EpisodeLedger: uplink phase of previous step not recorded");
    if (static_cast<int>(out.latencies.size()) != n_) throw std::logic_error("EpisodeLedger: DL outcome size mismatch");
    last_dl_latency_sum_ = 0.0;
    for (int i = 0; i < n_; ++i) {
        last_dl_latency_sum_ += out.latencies[i];
        cum_earning_[i] += out.earnings[i];
    }
    total_dl_latency_ += last_dl_latency_sum_;
    ul_pending_ = true;
}

void EpisodeLedger::record_ul(const UlOutcome& out) {
    if (!ul_pending_) throw std::logic_error("EpisodeLedger: downlink phase not recorded for this step");
    if (static_cast<int>(out.latencies.size()) != n_) throw std::logic_error("EpisodeLedger: UL outcome size mismatch");
    last_ul_latency_sum_ = 0.0;
    for (int i = 0; i < n_; ++i) {
        last_ul_latency_sum_ += out.latencies[i];
        cum_q_[i] += out.q_fractions[i];
    }
    total_ul_latency_ += last_ul_latency_sum_;
    ul_pending_ = false;
    ++steps_;
}

void EpisodeLedger::require_complete_step() const {
    if (steps_ == 0 || ul_pending_)
        throw std::logic_error("EpisodeLedger: no complete iteration recorded");
}

double EpisodeLedger::last_dl_latency_mean() const {
    if (steps_ == 0 && !ul_pending_) throw std::logic_error("EpisodeLedger: no downlink phase recorded");
    return last_dl_latency_sum_ / n_;
}

double EpisodeLedger::last_ul_latency_mean() const {
    require_complete_step();
    return last_ul_latency_sum_ / n_;
}

double EpisodeLedger::min_cum_earning() const {
    return *std::min_element(cum_earning_.begin(), cum_earning_.end());
}

double EpisodeLedger::mean_cum_earning() const {
    return std::accumulate(cum_earning_.begin(), cum_earning_.end(), 0.0) / n_;
}

double EpisodeLedger::min_cum_q() const {
    return *std::min_element(cum_q_.begin(), cum_q_.end());
}

double EpisodeLedger::max_cum_q() const {
    return *std::max_element(cum_q_.begin(), cum_q_.end());
}

double EpisodeLedger::mean_cum_q() const {
    return std::accumulate(cum_q_.begin(), cum_q_.end(), 0.0) / n_;
}

double uplink_reward(const EpisodeLedger& ledger, const RewardWeights& w, bool depleted) {
    if (depleted) return w.penalty;
    const double latency_term = -w.h * ledger.last_ul_latency_mean();
    if (w.literal_ul_reward)
        return latency_term + (1.0 - w.h) * w.f * ledger.min_cum_q();
    return latency_term - (1.0 - w.h) * w.f * ledger.max_cum_q();
}

double downlink_reward(const EpisodeLedger& ledger, const RewardWeights& w, bool depleted,
                       double ul_reward_same_step) {
    if (depleted) return w.penalty;
    return -w.q * ledger.last_dl_latency_mean()
           + (1.0 - w.q) * w.b * ledger.min_cum_earning()
           + w.varkappa * ul_reward_same_step;
}

double common_reward(const EpisodeLedger& ledger, const RewardWeights& w, bool depleted) {
    if (depleted) return w.penalty;
    const double dl_terms = w.q * ledger.last_dl_latency_mean()
                            - (1.0 - w.q) * w.b * ledger.min_cum_earning();
    const double ul_terms = w.h * ledger.last_ul_latency_mean()
                            + (1.0 - w.h) * w.f * ledger.max_cum_q();
    return -(w.w1 * dl_terms + w.w2 * ul_terms);
}

double episode_dl_utility(const EpisodeLedger& ledger, const RewardWeights& w) {
    return w.q * ledger.total_dl_latency() / ledger.n_ues()
           - (1.0 - w.q) * w.b * ledger.min_cum_earning();
}

double episode_ul_utility(const EpisodeLedger& ledger, const RewardWeights& w) {
    return w.h * ledger.total_ul_latency() / ledger.n_ues()
           + (1.0 - w.h) * w.f * ledger.max_cum_q();
}

double overall_objective(const EpisodeLedger& ledger, const RewardWeights& w) {
    return w.w1 * episode_dl_utility(ledger, w) + w.w2 * episode_ul_utility(ledger, w);
}

}  // namespace p2emec
