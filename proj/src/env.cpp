#include "p2emec/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "p2emec/reward.hpp"
#include "p2emec/text.hpp"

namespace p2emec {

namespace {

std::vector<int> assigned_set(const std::vector<int>& alloc, int mbs) {
    std::vector<int> set;
    for (int i = 0; i < static_cast<int>(alloc.size()); ++i)
        if (alloc[i] == mbs) set.push_back(i);
    return set;
}

int position_in(const std::vector<int>& order, int ue) {
    for (int k = 0; k < static_cast<int>(order.size()); ++k)
        if (order[k] == ue) return k;
    throw std::logic_error("UE not present in its own MBS ordering");
}

void append_array(std::string& line, const char* key, const std::vector<double>& v) {
    line += ",\"";
    line += key;
    line += "\":[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) line += ',';
        line += format_double(v[i]);
    }
    line += ']';
}

}  // namespace

std::vector<int> order_downlink(const GainMatrix& gains, double noise_psd,
                                const std::vector<int>& ue_set, int mbs) {
    std::vector<int> order = ue_set;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ra = gains.power(a, mbs) / noise_psd;
        const double rb = gains.power(b, mbs) / noise_psd;
        if (ra != rb) return ra > rb;
        return a < b;
    });
    return order;
}

std::vector<int> order_uplink(const std::vector<double>& ul_powers, const GainMatrix& gains,
                              const std::vector<int>& ue_set, int mbs) {
    std::vector<int> order = ue_set;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ra = ul_powers[a] * gains.power(a, mbs);
        const double rb = ul_powers[b] * gains.power(b, mbs);
        if (ra != rb) return ra > rb;
        return a < b;
    });
    return order;
}

double downlink_rate(const WorldState& world, const NetworkConfig& cfg, int ue) {
    const int mbs = world.alloc[ue];
    const std::vector<int> set = assigned_set(world.alloc, mbs);
    const std::vector<int> order = order_downlink(world.gains, cfg.noise_psd_dl, set, mbs);
    const int pos = position_in(order, ue);
    const double own_gain = world.gains.power(ue, mbs);
    double interference = 0.0;
    for (int k = 0; k < pos; ++k)
        interference += world.dl_powers[order[k]] * own_gain;
    const double noise = cfg.bandwidth_hz * cfg.noise_psd_dl;
    const double sinr = world.dl_powers[ue] * own_gain / (interference + noise);
    return cfg.bandwidth_hz * std::log2(1.0 + sinr);
}

double uplink_rate(const WorldState& world, const NetworkConfig& cfg,
                   const std::vector<double>& ul_powers, int ue) {
    const int mbs = world.alloc[ue];
    const std::vector<int> set = assigned_set(world.alloc, mbs);
    const std::vector<int> order = order_uplink(ul_powers, world.gains, set, mbs);
    const int pos = position_in(order, ue);
    double interference = 0.0;
    for (int k = pos + 1; k < static_cast<int>(order.size()); ++k)
        interference += ul_powers[order[k]] * world.gains.power(order[k], mbs);
    const double noise = cfg.bandwidth_hz * cfg.noise_psd_ul;
    const double sinr = ul_powers[ue] * world.gains.power(ue, mbs) / (interference + noise);
    return cfg.bandwidth_hz * std::log2(1.0 + sinr);
}

double downlink_latency(double size_bits, double rate_bps) {
    if (rate_bps <= 0.0) throw std::runtime_error("downlink_latency: zero rate");
    return size_bits / rate_bps;
}

EnergyAndQ uplink_energy_and_q(double p_ul, double latency_s, double battery_init) {
    const double energy = p_ul * latency_s;
    return {energy, 100.0 * energy / battery_init};
}

MecEnv::MecEnv(NetworkConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      channel_rng_(RngStream(seed).fork("channel")),
      mobility_rng_(RngStream(seed).fork("mobility")),
      data_rng_(RngStream(seed).fork("data")),
      dl_power_rng_(RngStream(seed).fork("dl-power")),
      ue_init_rng_(RngStream(seed).fork("ue-init")) {
    cfg_.validate();
    RngStream placement = RngStream(seed).fork("placement");
    world_.mbs_positions.resize(cfg_.m_mbs);
    for (auto& p : world_.mbs_positions) {
        p.x = placement.uniform(0.0, cfg_.area_x_max);
        p.y = placement.uniform(0.0, cfg_.area_y_max);
    }
    reset();
}

void MecEnv::reset() {
    if (frozen_snapshot_) {
        world_ = *frozen_snapshot_;
        awaiting_uplink_ = false;
        return;
    }
    const int n = cfg_.n_ues;
    world_.step = 1;
    world_.done = false;
    world_.depleted = false;
    world_.battery_init = cfg_.battery_init;
    world_.ue_positions.resize(n);
    for (auto& p : world_.ue_positions) {
        p.x = ue_init_rng_.uniform(0.0, cfg_.area_x_max);
        p.y = ue_init_rng_.uniform(0.0, cfg_.area_y_max);
    }
    world_.cum_energy.assign(n, 0.0);
    world_.cum_q.assign(n, 0.0);
    world_.cum_earning.assign(n, 0.0);
    world_.alloc.clear();
    awaiting_uplink_ = false;
    sample_iteration_inputs();
    if (cfg_.frozen_world) frozen_snapshot_ = world_;
}

void MecEnv::sample_iteration_inputs() {
    const int n = cfg_.n_ues;
    world_.dl_sizes.resize(n);
    world_.ul_sizes.resize(n);
    world_.dl_powers.resize(n);
    for (int i = 0; i < n; ++i) world_.dl_sizes[i] = data_rng_.uniform(cfg_.dl_data_min, cfg_.dl_data_max);
    for (int i = 0; i < n; ++i) world_.ul_sizes[i] = data_rng_.uniform(cfg_.ul_data_min, cfg_.ul_data_max);
    for (int i = 0; i < n; ++i) world_.dl_powers[i] = dl_power_rng_.uniform(cfg_.p_dl_min, cfg_.p_dl_max);
    world_.gains = gain_matrix(world_.ue_positions, world_.mbs_positions, cfg_, channel_rng_, world_.step);
}

double move_coordinate(double prev, double step, double bound) {
    const double next = prev + step;
    if (next <= 0.0) return 0.0;
    if (next >= bound) return bound;
    return next;
}

void MecEnv::sample_mobility() {
    for (auto& p : world_.ue_positions) {
        const double dx = mobility_rng_.uniform(-cfg_.step_x_max, cfg_.step_x_max);
        const double dy = mobility_rng_.uniform(-cfg_.step_y_max, cfg_.step_y_max);
        p.x = move_coordinate(p.x, dx, cfg_.area_x_max);
        p.y = move_coordinate(p.y, dy, cfg_.area_y_max);
    }
}

std::vector<double> MecEnv::dl_observation() const {
    const int n = cfg_.n_ues;
    const int m = cfg_.m_mbs;
    std::vector<double> obs;
    obs.reserve(static_cast<std::size_t>(n) * m + n);
    const double gain_scale = 1.0 / std::sqrt(cfg_.beta0);
    for (int i = 0; i < n; ++i)
        for (int v = 0; v < m; ++v)
            obs.push_back(std::abs(world_.gains.at(i, v)) * gain_scale);
    for (int i = 0; i < n; ++i)
        obs.push_back(world_.dl_sizes[i] / cfg_.dl_data_max);
    return obs;
}

std::vector<double> MecEnv::ul_observation() const {
    if (!awaiting_uplink_) throw std::logic_error("ul_observation: downlink phase not executed yet");
    return ul_observation_lookahead();
}

std::vector<double> MecEnv::ul_observation_lookahead() const {
    const int n = cfg_.n_ues;
    const int m = cfg_.m_mbs;
    std::vector<double> obs;
    obs.reserve(static_cast<std::size_t>(n) * m + n);
    const double gain_scale = 1.0 / std::sqrt(cfg_.beta0);
    for (int i = 0; i < n; ++i)
        for (int v = 0; v < m; ++v)
            obs.push_back(std::abs(world_.gains.at(i, v)) * gain_scale);
    for (int i = 0; i < n; ++i)
        obs.push_back(world_.battery(i) / world_.battery_init);
    return obs;
}

DlOutcome MecEnv::step_downlink(const std::vector<int>& alloc) {
    if (world_.done) throw std::logic_error("step_downlink: episode is done");
    if (awaiting_uplink_) throw std::logic_error("step_downlink: uplink phase pending");
    if (static_cast<int>(alloc.size()) != cfg_.n_ues)
        throw std::invalid_argument("step_downlink: allocation must have one entry per UE");
    for (int a : alloc)
        if (a < 0 || a >= cfg_.m_mbs)
            throw std::invalid_argument("step_downlink: MBS index " + std::to_string(a) +
                                        " out of [0," + std::to_string(cfg_.m_mbs - 1) + "]");
    world_.alloc = alloc;

    const int n = cfg_.n_ues;
    DlOutcome out;
    out.rates.resize(n);
    out.latencies.resize(n);
    out.earnings.resize(n);
    for (int i = 0; i < n; ++i) {
        out.rates[i] = downlink_rate(world_, cfg_, i);
        out.latencies[i] = downlink_latency(world_.dl_sizes[i], out.rates[i]);
        out.earnings[i] = earning_potential(out.rates[i], cfg_.profitability);
        world_.cum_earning[i] += out.earnings[i];
    }
    awaiting_uplink_ = true;
    if (trace_) trace_dl(out);
    return out;
}

MecEnv::UlStepResult MecEnv::step_uplink(const std::vector<double>& ul_powers) {
    if (world_.done) throw std::logic_error("step_uplink: episode is done");
    if (!awaiting_uplink_) throw std::logic_error("step_uplink: downlink phase not executed yet");
    if (static_cast<int>(ul_powers.size()) != cfg_.n_ues)
        throw std::invalid_argument("step_uplink: one power per UE required");
    for (double p : ul_powers)
        if (p < cfg_.p_ul_min || p > cfg_.p_ul_max)
            throw std::invalid_argument("step_uplink: power " + format_double(p) + " out of [" +
                                        format_double(cfg_.p_ul_min) + "," + format_double(cfg_.p_ul_max) + "]");

    const int n = cfg_.n_ues;
    UlStepResult result;
    auto& out = result.outcome;
    out.rates.resize(n);
    out.latencies.resize(n);
    out.energies.resize(n);
    out.q_fractions.resize(n);
    for (int i = 0; i < n; ++i) {
        out.rates[i] = uplink_rate(world_, cfg_, ul_powers, i);
        out.latencies[i] = downlink_latency(world_.ul_sizes[i], out.rates[i]);
        const EnergyAndQ eq = uplink_energy_and_q(ul_powers[i], out.latencies[i], world_.battery_init);
        out.energies[i] = eq.energy_j;
        out.q_fractions[i] = eq.q_percent;
    }

    bool depleted = false;
    for (int i = 0; i < n; ++i) {
        world_.cum_energy[i] += out.energies[i];
        world_.cum_q[i] += out.q_fractions[i];
        if (world_.battery_init - world_.cum_energy[i] < 0.0) depleted = true;
    }

    if (trace_) trace_ul(out);

    if (depleted) {
        world_.depleted = true;
        world_.done = true;
    } else if (world_.step == cfg_.t_steps) {
        world_.done = true;
    } else {
        sample_mobility();
        ++world_.step;
        sample_iteration_inputs();
    }
    awaiting_uplink_ = false;
    result.done = world_.done;
    result.depleted = world_.depleted;
    return result;
}

void MecEnv::trace_dl(const DlOutcome& out) const {
    std::string line = "{\"phase\":\"dl\",\"step\":" + std::to_string(world_.step);
    line += ",\"alloc\":[";
    for (std::size_t i = 0; i < world_.alloc.size(); ++i) {
        if (i) line += ',';
        line += std::to_string(world_.alloc[i]);
    }
    line += ']';
    append_array(line, "dl_powers", world_.dl_powers);
    append_array(line, "sizes", world_.dl_sizes);
    append_array(line, "rates", out.rates);
    append_array(line, "latencies", out.latencies);
    line += '}';
    (*trace_) << line << '\n';
}

void MecEnv::trace_ul(const UlOutcome& out) const {
    std::string line = "{\"phase\":\"ul\",\"step\":" + std::to_string(world_.step);
    append_array(line, "sizes", world_.ul_sizes);
    append_array(line, "rates", out.rates);
    append_array(line, "latencies", out.latencies);
    append_array(line, "energies", out.energies);
    std::vector<double> batteries(world_.cum_energy.size());
    for (std::size_t i = 0; i < batteries.size(); ++i)
        batteries[i] = world_.battery(static_cast<int>(i));
    append_array(line, "batteries", batteries);
    line += '}';
    (*trace_) << line << '\n';
}

}  // namespace p2emec
