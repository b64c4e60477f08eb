#pragma once

#include <complex>
#include <vector>

#include "p2emec/config.hpp"
#include "p2emec/rng.hpp"

namespace p2emec {

struct Position {
    double x = 0.0;
    double y = 0.0;
};

// Complex channel gains between every UE (row) and MBS (column) for one
// transmission iteration. Uplink and downlink share the same gains.
struct GainMatrix {
    int n_ues = 0;
    int m_mbs = 0;
    int step = 0;
    std::vector<std::complex<double>> gains;  // row-major, N x M

    std::complex<double> at(int ue, int mbs) const { return gains[static_cast<std::size_t>(ue) * m_mbs + mbs]; }
    double power(int ue, int mbs) const { return std::norm(at(ue, mbs)); }  // |g|^2
};

double distance(const Position& a, const Position& b);

// Distance-based large-scale gain beta0 * d^(-alpha). Distances below the
// 1 m reference are clamped to 1 m so the gain never exceeds beta0.
double large_scale_gain(double dist_m, double beta0, double alpha);

// Rician small-scale coefficient: unit LOS component mixed with a standard
// complex normal NLOS term. E[|zeta|^2] = 1 for every K >= 0.
std::complex<double> rician_sample(RngStream& rng, double k_factor);

std::complex<double> channel_gain(double beta, std::complex<double> zeta);

// Fresh fading for every (UE, MBS) pair, row-major draw order.
GainMatrix gain_matrix(const std::vector<Position>& ue_positions,
                       const std::vector<Position>& mbs_positions,
                       const NetworkConfig& cfg, RngStream& rng, int step);

}  // namespace p2emec
