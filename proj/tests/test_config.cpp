#include <doctest.h>

#include <stdexcept>
#include <string>

#include "p2emec/config.hpp"

using namespace p2emec;

TEST_CASE("defaults match the experiment constants") {
    const NetworkConfig cfg = default_network_config();
    CHECK(cfg.bandwidth_hz == 1e10);
    CHECK(cfg.t_steps == 100);
    CHECK(cfg.area_x_max == 100.0);
    CHECK(cfg.area_y_max == 100.0);
    CHECK(cfg.step_x_max == 10.0);
    CHECK(cfg.step_y_max == 10.0);
    CHECK(cfg.profitability == 10.0);
    CHECK(cfg.scale_b == 1.0);
    CHECK(cfg.scale_f == 1.0);
    CHECK(cfg.weight_q == 0.5);
    CHECK(cfg.weight_h == 0.5);
    CHECK(cfg.kappa1 == 0.5);
    CHECK(cfg.kappa2 == 0.5);
    CHECK(cfg.varkappa == 0.3);
    CHECK(cfg.penalty == -50.0);
    CHECK(cfg.rician_k == 3.0);
    CHECK(cfg.pathloss_alpha == 2.0);
    CHECK(cfg.dl_data_min == 8e8);
    CHECK(cfg.dl_data_max == 1e9);
    CHECK(cfg.p_dl_min == 1.5);
    CHECK(cfg.p_dl_max == 2.0);
    CHECK(cfg.p_ul_min == 3.0);
    CHECK(cfg.p_ul_max == 10.0);
    // -100 dBm/Hz, the standard reading of the stated noise floor
    CHECK(cfg.noise_psd_dl == 1e-13);
    CHECK(cfg.noise_psd_ul == 1e-13);
}

TEST_CASE("empty document yields defaults") {
    const Config cfg = parse_config_text("");
    CHECK(cfg.net.bandwidth_hz == 1e10);
    CHECK(cfg.train.seed == 0);
}

TEST_CASE("largest studied scenario parses") {
    const Config cfg = parse_config_text("n_ues = 8\nm_mbs = 4\n");
    CHECK(cfg.net.n_ues == 8);
    CHECK(cfg.net.m_mbs == 4);
}

TEST_CASE("weight bound violations name the key") {
    CHECK_THROWS_WITH_AS(parse_config_text("weight_q = 1.3\n"),
                         doctest::Contains("weight_q out of [0,1]"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("weight_h = -0.1\n"), std::invalid_argument);
}

TEST_CASE("unknown keys and malformed lines are rejected") {
    CHECK_THROWS_AS(parse_config_text("no_such_key = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("just some text\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("gamma = not_a_number\n"), std::invalid_argument);
}

TEST_CASE("comments and blank lines are ignored") {
    const Config cfg = parse_config_text("# comment\n\n  weight_q = 0.25\n");
    CHECK(cfg.net.weight_q == 0.25);
    // inline comments are not supported: the value text must parse
    CHECK_THROWS_AS(parse_config_text("weight_q = 0.25 # inline\n"), std::invalid_argument);
}

TEST_CASE("serialize then parse round-trips every field") {
    Config cfg;
    cfg.net.n_ues = 3;
    cfg.net.m_mbs = 2;
    cfg.net.beta0 = 0.123456789012345;
    cfg.net.weight_q = 1.0 / 3.0;
    cfg.net.literal_ul_reward = true;
    cfg.train.seed = 1234567;
    cfg.train.hidden_sizes = {16, 8};
    cfg.train.lambda_gae = 0.87;
    const Config back = parse_config_text(serialize_config(cfg));
    CHECK(serialize_config(back) == serialize_config(cfg));
    CHECK(back.net.beta0 == cfg.net.beta0);
    CHECK(back.net.weight_q == cfg.net.weight_q);
    CHECK(back.train.hidden_sizes == cfg.train.hidden_sizes);
}

TEST_CASE("apply_override changes exactly one key") {
    Config cfg;
    apply_override(cfg, "weight_h", "0.75");
    CHECK(cfg.net.weight_h == 0.75);
    CHECK_THROWS_AS(apply_override(cfg, "weight_hh", "0.75"), std::invalid_argument);
}

TEST_CASE("invariant checks") {
    Config cfg;
    cfg.net.p_ul_min = 11.0;  // above p_ul_max
    CHECK_THROWS_AS(cfg.net.validate(), std::invalid_argument);
    cfg = Config{};
    cfg.net.kappa1 = 0.0;
    cfg.net.kappa2 = 0.0;
    CHECK_THROWS_AS(cfg.net.validate(), std::invalid_argument);
    cfg = Config{};
    cfg.train.gamma = 0.0;
    CHECK_THROWS_AS(cfg.train.validate(), std::invalid_argument);
}

TEST_CASE("config hash is stable for equal configs") {
    Config a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.net.weight_q = 0.51;
    CHECK(config_hash(a) != config_hash(b));
}
