#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "p2emec/env.hpp"
#include "p2emec/reward.hpp"

using namespace p2emec;

namespace {

NetworkConfig small_cfg(int n, int m) {
    NetworkConfig cfg;
    cfg.n_ues = n;
    cfg.m_mbs = m;
    cfg.t_steps = 5;
    cfg.battery_init = 1e9;  // effectively unbounded for rate tests
    return cfg;
}

// Hand-built world with explicit gains (no RNG).
WorldState make_world(int n, int m, const std::vector<std::complex<double>>& gains,
                      const std::vector<int>& alloc, const std::vector<double>& dl_powers,
                      const std::vector<double>& dl_sizes) {
    WorldState w;
    w.gains.n_ues = n;
    w.gains.m_mbs = m;
    w.gains.gains = gains;
    w.alloc = alloc;
    w.dl_powers = dl_powers;
    w.dl_sizes = dl_sizes;
    w.ul_sizes.assign(n, 1e8);
    w.battery_init = 1e9;
    w.cum_energy.assign(n, 0.0);
    return w;
}

refimpl::Instance to_instance(const WorldState& w, const NetworkConfig& cfg,
                              const std::vector<double>& ul_powers) {
    refimpl::Instance in;
    in.n = cfg.n_ues;
    in.m = cfg.m_mbs;
    in.bandwidth = cfg.bandwidth_hz;
    in.noise_psd_dl = cfg.noise_psd_dl;
    in.noise_psd_ul = cfg.noise_psd_ul;
    in.gains = w.gains.gains;
    in.alloc = w.alloc;
    in.dl_powers = w.dl_powers;
    in.ul_powers = ul_powers;
    in.dl_sizes = w.dl_sizes;
    in.ul_sizes = w.ul_sizes;
    in.battery_init = w.battery_init;
    return in;
}

}  // namespace

TEST_CASE("downlink ordering sorts by channel-to-noise, ties by index") {
    GainMatrix gm;
    gm.n_ues = 3;
    gm.m_mbs = 1;
    gm.gains = {{2.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}};  // |g|^2 = 4, 1, 9
    CHECK(order_downlink(gm, 1.0, {0, 1, 2}, 0) == std::vector<int>{2, 0, 1});
    CHECK(order_downlink(gm, 1.0, {1}, 0) == std::vector<int>{1});
    gm.gains = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};  // equal |g|^2
    CHECK(order_downlink(gm, 1.0, {1, 2}, 0) == std::vector<int>{1, 2});
}

TEST_CASE("uplink ordering sorts by received power, ties by index") {
    GainMatrix gm;
    gm.n_ues = 3;
    gm.m_mbs = 1;
    gm.gains = {{1.0, 0.0}, {2.0, 0.0}, {1.0, 0.0}};  // |g|^2 = 1, 4, 1
    const std::vector<double> p = {2.0, 2.0, 5.0};    // received: 2, 8, 5
    CHECK(order_uplink(p, gm, {0, 1, 2}, 0) == std::vector<int>{1, 2, 0});
    const std::vector<double> tie = {4.0, 1.0, 4.0};  // received: 4, 4, 4
    CHECK(order_uplink(tie, gm, {0, 1, 2}, 0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("sole UE at SNR 1 transmits one bit per hertz") {
    NetworkConfig cfg = small_cfg(1, 1);
    // p * |g|^2 == B * sigma^2
    const double g2 = cfg.bandwidth_hz * cfg.noise_psd_dl / 1.75;
    WorldState w = make_world(1, 1, {std::complex<double>(std::sqrt(g2), 0.0)}, {0}, {1.75}, {1e9});
    CHECK(downlink_rate(w, cfg, 0) == doctest::Approx(cfg.bandwidth_hz).epsilon(1e-12));
    // uplink mirror with its own power
    const double gu2 = cfg.bandwidth_hz * cfg.noise_psd_ul / 5.0;
    w.gains.gains = {std::complex<double>(std::sqrt(gu2), 0.0)};
    CHECK(uplink_rate(w, cfg, {5.0}, 0) == doctest::Approx(cfg.bandwidth_hz).epsilon(1e-12));
}

TEST_CASE("three same-cell UEs match the term-by-term oracle") {
    NetworkConfig cfg = small_cfg(3, 1);
    const std::vector<std::complex<double>> gains = {
        {1e-3, 2e-3}, {-3e-3, 1e-3}, {5e-4, -5e-4}};
    WorldState w = make_world(3, 1, gains, {0, 0, 0}, {1.6, 1.9, 1.7}, {9e8, 8.5e8, 9.5e8});
    const std::vector<double> ul_powers = {4.0, 9.0, 6.0};
    const refimpl::Instance in = to_instance(w, cfg, ul_powers);
    for (int i = 0; i < 3; ++i) {
        CHECK(refimpl::rel_err(downlink_rate(w, cfg, i), refimpl::dl_rate(in, i)) < 1e-12);
        CHECK(refimpl::rel_err(uplink_rate(w, cfg, ul_powers, i), refimpl::ul_rate(in, i)) < 1e-12);
    }
}

TEST_CASE("first-ordered UE has an empty interference sum") {
    NetworkConfig cfg = small_cfg(2, 1);
    const std::vector<std::complex<double>> gains = {{2e-3, 0.0}, {1e-3, 0.0}};
    WorldState w = make_world(2, 1, gains, {0, 0}, {1.5, 2.0}, {9e8, 9e8});
    // UE0 has the stronger channel: its rate equals the interference-free formula
    const double own = w.gains.power(0, 0);
    const double expect =
        cfg.bandwidth_hz *
        std::log2(1.0 + 1.5 * own / (cfg.bandwidth_hz * cfg.noise_psd_dl));
    CHECK(downlink_rate(w, cfg, 0) == doctest::Approx(expect).epsilon(1e-12));
    // last-ordered uplink UE likewise
    const std::vector<double> ul = {10.0, 3.0};  // UE1 ordered last
    const double own1 = w.gains.power(1, 0);
    const double expect1 =
        cfg.bandwidth_hz *
        std::log2(1.0 + 3.0 * own1 / (cfg.bandwidth_hz * cfg.noise_psd_ul));
    CHECK(uplink_rate(w, cfg, ul, 1) == doctest::Approx(expect1).epsilon(1e-12));
}

TEST_CASE("latency and energy arithmetic") {
    CHECK(downlink_latency(1e9, 1e9) == 1.0);
    CHECK(downlink_latency(0.0, 123.0) == 0.0);
    CHECK(downlink_latency(9e8, 3e8) == doctest::Approx(3.0));
    CHECK_THROWS(downlink_latency(1.0, 0.0));
    const EnergyAndQ eq1 = uplink_energy_and_q(10.0, 0.5, 500.0);
    CHECK(eq1.energy_j == doctest::Approx(5.0));
    CHECK(eq1.q_percent == doctest::Approx(1.0));
    const EnergyAndQ eq2 = uplink_energy_and_q(3.0, 2.0, 10.0);
    CHECK(eq2.energy_j == doctest::Approx(6.0));
    CHECK(eq2.q_percent == doctest::Approx(60.0));
    const EnergyAndQ eq0 = uplink_energy_and_q(3.0, 0.0, 10.0);
    CHECK(eq0.energy_j == 0.0);
    CHECK(eq0.q_percent == 0.0);
}

TEST_CASE("init world is deterministic and in bounds") {
    NetworkConfig cfg;
    cfg.n_ues = 8;
    cfg.m_mbs = 4;
    MecEnv a(cfg, 0);
    MecEnv b(cfg, 0);
    CHECK(a.world().ue_positions.size() == 8);
    CHECK(a.world().mbs_positions.size() == 4);
    for (int i = 0; i < 8; ++i) {
        CHECK(a.world().ue_positions[i].x == b.world().ue_positions[i].x);
        CHECK(a.world().ue_positions[i].x >= 0.0);
        CHECK(a.world().ue_positions[i].x <= 100.0);
        CHECK(a.world().ue_positions[i].y >= 0.0);
        CHECK(a.world().ue_positions[i].y <= 100.0);
    }
    CHECK(a.world().gains.gains == b.world().gains.gains);
    CHECK(a.dl_observation() == b.dl_observation());
    // fresh batteries: zero cumulative percentages
    for (double q : a.world().cum_q) CHECK(q == 0.0);
}

TEST_CASE("iteration inputs respect the configured ranges") {
    NetworkConfig cfg;
    cfg.n_ues = 4;
    cfg.m_mbs = 2;
    MecEnv env(cfg, 3);
    for (double d : env.world().dl_sizes) {
        CHECK(d >= 8e8);
        CHECK(d <= 1e9);
    }
    for (double p : env.world().dl_powers) {
        CHECK(p >= 1.5);
        CHECK(p <= 2.0);
    }
}

TEST_CASE("mobility clamp cases") {
    CHECK(move_coordinate(95.0, 10.0, 100.0) == 100.0);  // upper clamp
    CHECK(move_coordinate(5.0, -10.0, 100.0) == 0.0);    // lower clamp
    CHECK(move_coordinate(50.0, 3.0, 100.0) == 53.0);    // interior
    CHECK(move_coordinate(90.0, 10.0, 100.0) == 100.0);  // boundary hit counts as clamp
}

TEST_CASE("mobility clamps to the closed box") {
    // drive an env with an extreme step bound so clamping is exercised
    NetworkConfig cfg = small_cfg(4, 1);
    cfg.step_x_max = 200.0;
    cfg.step_y_max = 200.0;
    cfg.t_steps = 50;
    MecEnv env(cfg, 13);
    std::vector<double> powers(4, 5.0);
    std::vector<int> alloc(4, 0);
    for (int t = 0; t < 49; ++t) {
        env.step_downlink(alloc);
        env.step_uplink(powers);
        for (const auto& p : env.world().ue_positions) {
            CHECK(p.x >= 0.0);
            CHECK(p.x <= cfg.area_x_max);
            CHECK(p.y >= 0.0);
            CHECK(p.y <= cfg.area_y_max);
        }
    }
}

TEST_CASE("invalid allocation and power are rejected") {
    NetworkConfig cfg = small_cfg(2, 2);
    MecEnv env(cfg, 1);
    CHECK_THROWS(env.step_downlink({0, 2}));   // MBS index out of range
    CHECK_THROWS(env.step_downlink({-1, 0}));
    CHECK_THROWS(env.step_downlink({0}));      // wrong length
    env.step_downlink({0, 1});
    CHECK_THROWS(env.step_uplink({2.9, 5.0}));   // below p_ul_min
    CHECK_THROWS(env.step_uplink({5.0, 10.1}));  // above p_ul_max
    CHECK_NOTHROW(env.step_uplink({3.0, 10.0}));  // bounds inclusive
}

TEST_CASE("phase discipline is enforced") {
    NetworkConfig cfg = small_cfg(2, 2);
    MecEnv env(cfg, 1);
    CHECK_THROWS(env.ul_observation());
    CHECK_THROWS(env.step_uplink({5.0, 5.0}));
    env.step_downlink({0, 1});
    CHECK_THROWS(env.step_downlink({0, 1}));
}

TEST_CASE("battery ledger identity and depletion termination") {
    NetworkConfig cfg = small_cfg(2, 1);
    cfg.battery_init = 0.5;  // deplete quickly
    cfg.t_steps = 100;
    MecEnv env(cfg, 21);
    double spent[2] = {0.0, 0.0};
    bool done = false;
    int steps = 0;
    while (!done) {
        env.step_downlink({0, 0});
        const auto res = env.step_uplink({10.0, 10.0});
        for (int i = 0; i < 2; ++i) {
            spent[i] += res.outcome.energies[i];
            // bit-exact ledger while the battery is non-negative
            if (!res.depleted)
                CHECK(env.world().battery(i) == cfg.battery_init - spent[i]);
        }
        done = res.done;
        ++steps;
        if (res.depleted) {
            CHECK(env.world().depleted);
            for (int i = 0; i < 2; ++i) CHECK(env.world().battery(i) >= 0.0);
        }
    }
    CHECK(steps < 100);  // power 10 W against a 0.5 J battery cannot last
    CHECK(env.world().done);
    CHECK_THROWS(env.step_downlink({0, 0}));
}

TEST_CASE("horizon end without depletion") {
    NetworkConfig cfg = small_cfg(1, 1);
    cfg.t_steps = 3;
    cfg.battery_init = 1e12;
    MecEnv env(cfg, 2);
    for (int t = 1; t <= 3; ++t) {
        CHECK(env.world().step == t);
        env.step_downlink({0});
        const auto res = env.step_uplink({3.0});
        CHECK(res.done == (t == 3));
        CHECK_FALSE(res.depleted);
    }
    CHECK(env.world().done);
    CHECK_FALSE(env.world().depleted);
}

TEST_CASE("observations have the documented layout") {
    NetworkConfig cfg = small_cfg(2, 2);
    MecEnv env(cfg, 5);
    const auto obs = env.dl_observation();
    REQUIRE(obs.size() == 6);
    const auto& w = env.world();
    const double scale = 1.0 / std::sqrt(cfg.beta0);
    for (int i = 0; i < 2; ++i)
        for (int v = 0; v < 2; ++v)
            CHECK(obs[i * 2 + v] == doctest::Approx(std::abs(w.gains.at(i, v)) * scale));
    CHECK(obs[4] == doctest::Approx(w.dl_sizes[0] / cfg.dl_data_max));
    CHECK(obs[5] == doctest::Approx(w.dl_sizes[1] / cfg.dl_data_max));

    env.step_downlink({0, 1});
    const auto ul_obs = env.ul_observation();
    REQUIRE(ul_obs.size() == 6);
    // fresh episode: battery block all at full charge
    CHECK(ul_obs[4] == 1.0);
    CHECK(ul_obs[5] == 1.0);

    NetworkConfig big = small_cfg(3, 4);
    MecEnv env2(big, 5);
    CHECK(env2.dl_observation().size() == 15);
}

TEST_CASE("battery block tracks cumulative energy spend") {
    NetworkConfig cfg = small_cfg(2, 1);
    cfg.battery_init = 50.0;
    MecEnv env(cfg, 8);
    double spent[2] = {0.0, 0.0};
    for (int t = 0; t < 3; ++t) {
        env.step_downlink({0, 0});
        const auto res = env.step_uplink({4.0, 7.0});
        spent[0] += res.outcome.energies[0];
        spent[1] += res.outcome.energies[1];
    }
    env.step_downlink({0, 0});
    const auto obs = env.ul_observation();
    CHECK(obs[2] == doctest::Approx((50.0 - spent[0]) / 50.0));
    CHECK(obs[3] == doctest::Approx((50.0 - spent[1]) / 50.0));
}

TEST_CASE("same seed replays the same episode") {
    NetworkConfig cfg = small_cfg(3, 2);
    MecEnv a(cfg, 17);
    MecEnv b(cfg, 17);
    for (int t = 0; t < 5; ++t) {
        const auto da = a.step_downlink({0, 1, 0});
        const auto db = b.step_downlink({0, 1, 0});
        CHECK(da.rates == db.rates);
        const auto ua = a.step_uplink({5.0, 6.0, 7.0});
        const auto ub = b.step_uplink({5.0, 6.0, 7.0});
        CHECK(ua.outcome.energies == ub.outcome.energies);
        if (ua.done) break;
    }
}

TEST_CASE("frozen world restores the first episode on reset") {
    NetworkConfig cfg = small_cfg(2, 2);
    cfg.frozen_world = true;
    cfg.t_steps = 1;
    MecEnv env(cfg, 4);
    const auto obs0 = env.dl_observation();
    env.step_downlink({0, 1});
    env.step_uplink({5.0, 5.0});
    env.reset();
    CHECK(env.dl_observation() == obs0);
    env.step_downlink({1, 0});
    env.step_uplink({3.0, 9.0});
    env.reset();
    CHECK(env.dl_observation() == obs0);
}

TEST_CASE("inter-cell isolation: uplink powers on one MBS leave the other cell alone") {
    NetworkConfig cfg = small_cfg(4, 2);
    MecEnv env(cfg, 33);
    WorldState w = env.world();
    w.alloc = {0, 0, 1, 1};
    std::vector<double> p1 = {3.0, 10.0, 5.0, 6.0};
    std::vector<double> p2 = {3.0, 10.0, 5.0, 6.0};
    p2[0] = 9.0;  // change a cell-0 UE's power
    p2[1] = 4.0;
    CHECK(uplink_rate(w, cfg, p1, 2) == uplink_rate(w, cfg, p2, 2));
    CHECK(uplink_rate(w, cfg, p1, 3) == uplink_rate(w, cfg, p2, 3));
    CHECK(uplink_rate(w, cfg, p1, 0) != uplink_rate(w, cfg, p2, 0));
}

TEST_CASE("own rate rises with own power") {
    NetworkConfig cfg = small_cfg(3, 1);
    MecEnv env(cfg, 41);
    WorldState w = env.world();
    w.alloc = {0, 0, 0};
    // downlink: raising the UE's own downlink power raises its rate
    WorldState w2 = w;
    w2.dl_powers[1] = w.dl_powers[1] + 0.05;
    CHECK(downlink_rate(w2, cfg, 1) > downlink_rate(w, cfg, 1));
    // uplink: small own-power increase that keeps the decoding order fixed
    std::vector<double> p = {5.0, 6.0, 7.0};
    std::vector<double> p_up = p;
    p_up[1] += 1e-6;
    const auto order_before = order_uplink(p, w.gains, {0, 1, 2}, 0);
    const auto order_after = order_uplink(p_up, w.gains, {0, 1, 2}, 0);
    REQUIRE(order_before == order_after);
    CHECK(uplink_rate(w, cfg, p_up, 1) > uplink_rate(w, cfg, p, 1));
}

TEST_CASE("trace emits one record per phase") {
    NetworkConfig cfg = small_cfg(2, 1);
    cfg.t_steps = 2;
    std::ostringstream trace;
    MecEnv env(cfg, 9);
    env.set_trace(&trace);
    env.step_downlink({0, 0});
    env.step_uplink({5.0, 5.0});
    const std::string text = trace.str();
    CHECK(text.find("\"phase\":\"dl\"") != std::string::npos);
    CHECK(text.find("\"phase\":\"ul\"") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
