#pragma once

#include <span>
#include <string>
#include <vector>

#include "p2emec/rng.hpp"

namespace p2emec {

// Dense layer, weights row-major [out][in].
struct Affine {
    int in = 0;
    int out = 0;
    std::vector<double> w;
    std::vector<double> b;
};

// Plain multilayer perceptron: tanh on hidden layers, identity on the output
// unless tanh_output is set. The same struct doubles as a gradient holder.
struct Mlp {
    std::vector<Affine> layers;
    bool tanh_output = false;
};

struct MlpCache {
    // acts[0] is the input; acts[k] is the post-activation output of layer k-1.
    std::vector<std::vector<double>> acts;
};

Mlp make_mlp(const std::vector<int>& sizes, bool tanh_output, RngStream& rng);
Mlp zeros_like(const Mlp& net);
void zero_grads(Mlp& grads);

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x, MlpCache* cache = nullptr);

// Accumulates d(dy . y)/d(params) into grads and returns d(dy . y)/dx.
std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::span<const double> dy, Mlp& grads);

// Ordered list of every parameter tensor of a model; the same extraction
// applied to a zeros_like copy yields the matching gradient slots.
struct ParamRefs {
    std::vector<std::string> names;
    std::vector<std::vector<double>*> slots;

    std::size_t total_size() const;
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);
};

void append_mlp_refs(ParamRefs& refs, Mlp& net, const std::string& prefix);

// Bias-corrected Adam, descent on a loss gradient.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

AdamState make_adam_state(const ParamRefs& params);
void adam_step(const ParamRefs& params, const ParamRefs& grads, AdamState& state, double lr);

// Discrete allocation policy: one M-way softmax block per UE, sampled
// independently; the joint log-probability is the sum over blocks.
class DlActor {
public:
    DlActor() = default;
    DlActor(int obs_dim, int n_ues, int n_mbs, const std::vector<int>& hidden, RngStream& rng);

    struct Sample {
        std::vector<int> alloc;
        double log_prob = 0.0;
        std::vector<double> probs;  // N x M, row-major
    };
    Sample sample(std::span<const double> obs, RngStream& rng) const;
    std::vector<int> greedy(std::span<const double> obs) const;

    struct EvalCache {
        MlpCache cache;
        std::vector<double> probs;
        std::vector<int> action;
    };
    double log_prob(std::span<const double> obs, const std::vector<int>& action,
                    EvalCache* cache = nullptr) const;
    // Accumulates coeff * d(log_prob)/d(params) into grads.
    void log_prob_backward(const EvalCache& cache, double coeff, DlActor& grads) const;

    ParamRefs params();
    DlActor zeros() const;

    int n_ues() const { return n_; }
    int n_mbs() const { return m_; }

    Mlp net;

private:
    std::vector<double> block_probs(std::span<const double> obs, MlpCache* cache) const;
    int n_ = 0;
    int m_ = 0;
};

// Continuous power policy: state-dependent Gaussian mean per UE with a
// learned state-independent log-std. Samples are clamped to [0,1] and scaled
// into the configured power range; log-probabilities use the pre-clamp
// density.
class UlActor {
public:
    UlActor() = default;
    UlActor(int obs_dim, int n_ues, const std::vector<int>& hidden, double logstd_init,
            RngStream& rng);

    static double scale_power(double raw, double p_min, double p_max);

    struct Sample {
        std::vector<double> raw;     // pre-clamp Gaussian draws
        std::vector<double> powers;  // clamped and scaled to [p_min, p_max]
        double log_prob = 0.0;
    };
    Sample sample(std::span<const double> obs, RngStream& rng, double p_min, double p_max) const;
    std::vector<double> greedy_powers(std::span<const double> obs, double p_min, double p_max) const;

    struct EvalCache {
        MlpCache cache;
        std::vector<double> mean;
        std::vector<double> raw;
    };
    double log_prob(std::span<const double> obs, const std::vector<double>& raw,
                    EvalCache* cache = nullptr) const;
    void log_prob_backward(const EvalCache& cache, double coeff, UlActor& grads) const;

    ParamRefs params();
    UlActor zeros() const;

    int n_ues() const { return n_; }

    Mlp net;
    std::vector<double> log_std;

private:
    int n_ = 0;
};

enum class CriticHead { dl, ul };

// Two-head critic: per-head input adapters feeding a shared backbone, with a
// scalar head per agent. hidden.front() is the adapter width, the remaining
// entries form the backbone.
class MalsCritic {
public:
    MalsCritic() = default;
    MalsCritic(int obs_dim_dl, int obs_dim_ul, const std::vector<int>& hidden, RngStream& rng);

    struct EvalCache {
        MlpCache adapter;
        MlpCache backbone;
        MlpCache head;
        CriticHead which = CriticHead::dl;
    };
    double value(std::span<const double> obs, CriticHead head, EvalCache* cache = nullptr) const;
    // Accumulates coeff * dV/d(params) into grads (adapter, backbone, head).
    void value_backward(const EvalCache& cache, double coeff, MalsCritic& grads) const;

    ParamRefs params();
    MalsCritic zeros() const;

    Mlp adapter_dl;
    Mlp adapter_ul;
    Mlp backbone;
    Mlp head_dl;
    Mlp head_ul;
};

// Ordinary single-head value network (independent and centralized baselines).
class SingleCritic {
public:
    SingleCritic() = default;
    SingleCritic(int obs_dim, const std::vector<int>& hidden, RngStream& rng);

    double value(std::span<const double> obs, MlpCache* cache = nullptr) const;
    void value_backward(const MlpCache& cache, double coeff, SingleCritic& grads) const;

    ParamRefs params();
    SingleCritic zeros() const;

    Mlp net;
};

}  // namespace p2emec
