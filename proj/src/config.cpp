#include "p2emec/config.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "p2emec/text.hpp"

namespace p2emec {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

struct KeyEntry {
    std::string name;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = [] {
        std::vector<KeyEntry> t;
        auto add_int = [&t](const char* name, auto member) {
            t.push_back({name,
                         [member](const Config& c) { return std::to_string(std::invoke(member, c)); },
                         [member](Config& c, const std::string& v) {
                             std::invoke(member, c) = static_cast<std::remove_reference_t<decltype(std::invoke(member, c))>>(parse_int(v));
                         }});
        };
        auto add_double = [&t](const char* name, auto member) {
            t.push_back({name,
                         [member](const Config& c) { return format_double(std::invoke(member, c)); },
                         [member](Config& c, const std::string& v) { std::invoke(member, c) = parse_double(v); }});
        };
        auto add_bool = [&t](const char* name, auto member) {
            t.push_back({name,
                         [member](const Config& c) { return std::invoke(member, c) ? std::string("true") : std::string("false"); },
                         [member](Config& c, const std::string& v) { std::invoke(member, c) = parse_bool(v); }});
        };

        auto net = [](auto field) { return [field](auto&& c) -> decltype(auto) { return std::invoke(field, c.net); }; };
        auto trn = [](auto field) { return [field](auto&& c) -> decltype(auto) { return std::invoke(field, c.train); }; };

        add_int("n_ues", net(&NetworkConfig::n_ues));
        add_int("m_mbs", net(&NetworkConfig::m_mbs));
        add_int("t_steps", net(&NetworkConfig::t_steps));
        add_double("area_x_max", net(&NetworkConfig::area_x_max));
        add_double("area_y_max", net(&NetworkConfig::area_y_max));
        add_double("step_x_max", net(&NetworkConfig::step_x_max));
        add_double("step_y_max", net(&NetworkConfig::step_y_max));
        add_double("bandwidth_hz", net(&NetworkConfig::bandwidth_hz));
        add_double("noise_psd_dl", net(&NetworkConfig::noise_psd_dl));
        add_double("noise_psd_ul", net(&NetworkConfig::noise_psd_ul));
        add_double("p_dl_min", net(&NetworkConfig::p_dl_min));
        add_double("p_dl_max", net(&NetworkConfig::p_dl_max));
        add_double("p_ul_min", net(&NetworkConfig::p_ul_min));
        add_double("p_ul_max", net(&NetworkConfig::p_ul_max));
        add_double("dl_data_min", net(&NetworkConfig::dl_data_min));
        add_double("dl_data_max", net(&NetworkConfig::dl_data_max));
        add_double("ul_data_min", net(&NetworkConfig::ul_data_min));
        add_double("ul_data_max", net(&NetworkConfig::ul_data_max));
        add_double("battery_init", net(&NetworkConfig::battery_init));
        add_double("profitability", net(&NetworkConfig::profitability));
        add_double("scale_b", net(&NetworkConfig::scale_b));
        add_double("scale_f", net(&NetworkConfig::scale_f));
        add_double("weight_q", net(&NetworkConfig::weight_q));
        add_double("weight_h", net(&NetworkConfig::weight_h));
        add_double("weight_w1", net(&NetworkConfig::weight_w1));
        add_double("weight_w2", net(&NetworkConfig::weight_w2));
        add_double("kappa1", net(&NetworkConfig::kappa1));
        add_double("kappa2", net(&NetworkConfig::kappa2));
        add_double("varkappa", net(&NetworkConfig::varkappa));
        add_double("penalty", net(&NetworkConfig::penalty));
        add_double("rician_k", net(&NetworkConfig::rician_k));
        add_double("pathloss_alpha", net(&NetworkConfig::pathloss_alpha));
        add_double("beta0", net(&NetworkConfig::beta0));
        add_bool("literal_ul_reward", net(&NetworkConfig::literal_ul_reward));
        add_bool("frozen_world", net(&NetworkConfig::frozen_world));

        add_int("total_steps", trn(&TrainConfig::total_steps));
        add_int("horizon", trn(&TrainConfig::horizon));
        add_int("epochs", trn(&TrainConfig::epochs));
        add_int("group_size", trn(&TrainConfig::group_size));
        add_double("gamma", trn(&TrainConfig::gamma));
        add_double("lambda_gae", trn(&TrainConfig::lambda_gae));
        add_double("clip_eps", trn(&TrainConfig::clip_eps));
        add_double("lr_actor", trn(&TrainConfig::lr_actor));
        add_double("lr_critic", trn(&TrainConfig::lr_critic));
        add_int("target_sync_interval", trn(&TrainConfig::target_sync_interval));
        add_double("gaussian_logstd_init", trn(&TrainConfig::gaussian_logstd_init));
        t.push_back({"hidden_sizes",
                     [](const Config& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.train.hidden_sizes.size(); ++i) {
                             if (i) s += ',';
                             s += std::to_string(c.train.hidden_sizes[i]);
                         }
                         return s;
                     },
                     [](Config& c, const std::string& v) {
                         std::vector<int> sizes;
                         for (const auto& part : split(v, ','))
                             sizes.push_back(static_cast<int>(parse_int(part)));
                         c.train.hidden_sizes = std::move(sizes);
                     }});
        add_bool("normalize_advantages", trn(&TrainConfig::normalize_advantages));
        t.push_back({"seed",
                     [](const Config& c) { return std::to_string(c.train.seed); },
                     [](Config& c, const std::string& v) {
                         long long s = parse_int(v);
                         require(s >= 0, "seed must be non-negative");
                         c.train.seed = static_cast<std::uint64_t>(s);
                     }});
        return t;
    }();
    return table;
}

const KeyEntry* find_key(const std::string& name) {
    for (const auto& e : key_table())
        if (e.name == name) return &e;
    return nullptr;
}

}  // namespace

void NetworkConfig::validate() const {
    require(n_ues >= 1, "n_ues out of [1,inf)");
    require(m_mbs >= 1, "m_mbs out of [1,inf)");
    require(t_steps >= 1, "t_steps out of [1,inf)");
    require(area_x_max > 0 && area_y_max > 0, "area bounds must be positive");
    require(step_x_max > 0 && step_y_max > 0, "step bounds must be positive");
    require(bandwidth_hz > 0, "bandwidth_hz must be positive");
    require(noise_psd_dl > 0, "noise_psd_dl must be positive");
    require(noise_psd_ul > 0, "noise_psd_ul must be positive");
    require(weight_q >= 0 && weight_q <= 1, "weight_q out of [0,1]");
    require(weight_h >= 0 && weight_h <= 1, "weight_h out of [0,1]");
    require(p_dl_min > 0 && p_dl_min <= p_dl_max, "p_dl range invalid: need 0 < p_dl_min <= p_dl_max");
    require(p_ul_min > 0 && p_ul_min <= p_ul_max, "p_ul range invalid: need 0 < p_ul_min <= p_ul_max");
    require(dl_data_min >= 0 && dl_data_min <= dl_data_max, "dl_data range invalid");
    require(ul_data_min >= 0 && ul_data_min <= ul_data_max, "ul_data range invalid");
    require(battery_init > 0, "battery_init must be positive");
    require(kappa1 >= 0, "kappa1 out of [0,inf)");
    require(kappa2 >= 0, "kappa2 out of [0,inf)");
    require(kappa1 + kappa2 > 0, "kappa1 + kappa2 must be positive");
    require(rician_k >= 0, "rician_k out of [0,inf)");
    require(beta0 > 0, "beta0 must be positive");
}

void TrainConfig::validate() const {
    require(total_steps >= 0, "total_steps out of [0,inf)");
    require(horizon >= 1, "horizon out of [1,inf)");
    require(epochs >= 1, "epochs out of [1,inf)");
    require(group_size >= 1, "group_size out of [1,inf)");
    require(gamma > 0 && gamma <= 1, "gamma out of (0,1]");
    require(lambda_gae >= 0 && lambda_gae <= 1, "lambda_gae out of [0,1]");
    require(clip_eps > 0, "clip_eps must be positive");
    require(lr_actor > 0 && lr_critic > 0, "learning rates must be positive");
    require(target_sync_interval >= 1, "target_sync_interval out of [1,inf)");
    require(!hidden_sizes.empty(), "hidden_sizes must be nonempty");
    for (int h : hidden_sizes) require(h >= 1, "hidden_sizes entries must be >= 1");
}

NetworkConfig default_network_config() { return NetworkConfig{}; }
TrainConfig default_train_config() { return TrainConfig{}; }

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        apply_override(cfg, key, value);
    }
    cfg.net.validate();
    cfg.train.validate();
    return cfg;
}

Config load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(Config& cfg, const std::string& key, const std::string& value) {
    const KeyEntry* entry = find_key(key);
    if (!entry) throw std::invalid_argument("unknown config key: '" + key + "'");
    try {
        entry->set(cfg, value);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(key + ": " + e.what());
    }
}

std::string serialize_config(const Config& cfg) {
    std::string out;
    for (const auto& e : key_table()) {
        out += e.name;
        out += " = ";
        out += e.get(cfg);
        out += '\n';
    }
    return out;
}

std::string config_hash(const Config& cfg) {
    const std::string s = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace p2emec
