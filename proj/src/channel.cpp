#include "p2emec/channel.hpp"

#include <cmath>

namespace p2emec {

double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double large_scale_gain(double dist_m, double beta0, double alpha) {
    const double d = dist_m < 1.0 ? 1.0 : dist_m;
    return beta0 * std::pow(d, -alpha);
}

std::complex<double> rician_sample(RngStream& rng, double k_factor) {
    static constexpr std::complex<double> los{1.0, 0.0};
    const double los_w = std::sqrt(k_factor / (k_factor + 1.0));
    const double nlos_w = std::sqrt(1.0 / (k_factor + 1.0));
    return los_w * los + nlos_w * rng.complex_normal();
}

std::complex<double> channel_gain(double beta, std::complex<double> zeta) {
    return std::sqrt(beta) * zeta;
}

GainMatrix gain_matrix(const std::vector<Position>& ue_positions,
                       const std::vector<Position>& mbs_positions,
                       const NetworkConfig& cfg, RngStream& rng, int step) {
    GainMatrix gm;
    gm.n_ues = static_cast<int>(ue_positions.size());
    gm.m_mbs = static_cast<int>(mbs_positions.size());
    gm.step = step;
    gm.gains.resize(static_cast<std::size_t>(gm.n_ues) * gm.m_mbs);
    for (int i = 0; i < gm.n_ues; ++i) {
        for (int v = 0; v < gm.m_mbs; ++v) {
            const double beta = large_scale_gain(distance(ue_positions[i], mbs_positions[v]),
                                                 cfg.beta0, cfg.pathloss_alpha);
            gm.gains[static_cast<std::size_t>(i) * gm.m_mbs + v] =
                channel_gain(beta, rician_sample(rng, cfg.rician_k));
        }
    }
    return gm;
}

}  // namespace p2emec
