#include "p2emec/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace p2emec {

namespace {

constexpr double kLogSqrt2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)

std::vector<int> with_output(const std::vector<int>& hidden, int in, int out) {
    std::vector<int> sizes;
    sizes.reserve(hidden.size() + 2);
    sizes.push_back(in);
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(out);
    return sizes;
}

void check_shapes(const ParamRefs& a, const ParamRefs& b, const char* what) {
    if (a.slots.size() != b.slots.size()) throw std::logic_error(std::string(what) + ": slot count mismatch");
    for (std::size_t i = 0; i < a.slots.size(); ++i)
        if (a.slots[i]->size() != b.slots[i]->size())
            throw std::logic_error(std::string(what) + ": tensor size mismatch at " + a.names[i]);
}

}  // namespace

Mlp make_mlp(const std::vector<int>& sizes, bool tanh_output, RngStream& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output sizes");
    Mlp net;
    net.tanh_output = tanh_output;
    net.layers.resize(sizes.size() - 1);
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        Affine& layer = net.layers[k];
        layer.in = sizes[k];
        layer.out = sizes[k + 1];
        layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
        layer.b.assign(layer.out, 0.0);
        // Xavier-uniform
        const double limit = std::sqrt(6.0 / (layer.in + layer.out));
        for (auto& w : layer.w) w = rng.uniform(-limit, limit);
    }
    return net;
}

Mlp zeros_like(const Mlp& net) {
    Mlp g = net;
    zero_grads(g);
    return g;
}

void zero_grads(Mlp& grads) {
    for (auto& layer : grads.layers) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x, MlpCache* cache) {
    if (net.layers.empty()) {
        // Pass-through (used for degenerate backbones).
        std::vector<double> y(x.begin(), x.end());
        if (cache) cache->acts.assign(1, y);
        return y;
    }
    if (static_cast<int>(x.size()) != net.layers.front().in)
        throw std::invalid_argument("mlp_forward: input length mismatch");
    std::vector<double> a(x.begin(), x.end());
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(a);
    }
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const Affine& layer = net.layers[k];
        std::vector<double> z(layer.out);
        for (int o = 0; o < layer.out; ++o) {
            double acc = layer.b[o];
            const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) acc += wrow[i] * a[i];
            z[o] = acc;
        }
        const bool activate = (k + 1 < net.layers.size()) || net.tanh_output;
        if (activate)
            for (auto& v : z) v = std::tanh(v);
        a = std::move(z);
        if (cache) cache->acts.push_back(a);
    }
    return a;
}

std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::span<const double> dy, Mlp& grads) {
    if (net.layers.empty())
        return std::vector<double>(dy.begin(), dy.end());
    if (cache.acts.size() != net.layers.size() + 1)
        throw std::logic_error("mlp_backward: cache does not match network");
    std::vector<double> delta(dy.begin(), dy.end());
    for (int k = static_cast<int>(net.layers.size()) - 1; k >= 0; --k) {
        const Affine& layer = net.layers[k];
        Affine& glayer = grads.layers[k];
        const auto& input = cache.acts[k];
        const auto& output = cache.acts[k + 1];
        const bool activated = (k + 1 < static_cast<int>(net.layers.size())) || net.tanh_output;
        if (activated)
            for (int o = 0; o < layer.out; ++o) delta[o] *= 1.0 - output[o] * output[o];
        std::vector<double> dprev(layer.in, 0.0);
        for (int o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            glayer.b[o] += d;
            double* gwrow = glayer.w.data() + static_cast<std::size_t>(o) * layer.in;
            const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
                gwrow[i] += d * input[i];
                dprev[i] += d * wrow[i];
            }
        }
        delta = std::move(dprev);
    }
    return delta;
}

std::size_t ParamRefs::total_size() const {
    std::size_t n = 0;
    for (const auto* s : slots) n += s->size();
    return n;
}

std::vector<double> ParamRefs::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_size());
    for (const auto* s : slots) flat.insert(flat.end(), s->begin(), s->end());
    return flat;
}

void ParamRefs::unflatten(std::span<const double> flat) {
    if (flat.size() != total_size()) throw std::invalid_argument("unflatten: size mismatch");
    std::size_t off = 0;
    for (auto* s : slots) {
        std::copy(flat.begin() + off, flat.begin() + off + s->size(), s->begin());
        off += s->size();
    }
}

void append_mlp_refs(ParamRefs& refs, Mlp& net, const std::string& prefix) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        refs.names.push_back(prefix + ".l" + std::to_string(k) + ".w");
        refs.slots.push_back(&net.layers[k].w);
        refs.names.push_back(prefix + ".l" + std::to_string(k) + ".b");
        refs.slots.push_back(&net.layers[k].b);
    }
}

AdamState make_adam_state(const ParamRefs& params) {
    AdamState st;
    st.m.reserve(params.slots.size());
    st.v.reserve(params.slots.size());
    for (const auto* s : params.slots) {
        st.m.emplace_back(s->size(), 0.0);
        st.v.emplace_back(s->size(), 0.0);
    }
    return st;
}

void adam_step(const ParamRefs& params, const ParamRefs& grads, AdamState& state, double lr) {
    check_shapes(params, grads, "adam_step");
    if (state.m.size() != params.slots.size()) throw std::logic_error("adam_step: state mismatch");
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t s = 0; s < params.slots.size(); ++s) {
        auto& p = *params.slots[s];
        const auto& g = *grads.slots[s];
        auto& m = state.m[s];
        auto& v = state.v[s];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// DlActor

DlActor::DlActor(int obs_dim, int n_ues, int n_mbs, const std::vector<int>& hidden, RngStream& rng)
    : n_(n_ues), m_(n_mbs) {
    net = make_mlp(with_output(hidden, obs_dim, n_ues * n_mbs), false, rng);
}

std::vector<double> DlActor::block_probs(std::span<const double> obs, MlpCache* cache) const {
    std::vector<double> logits = mlp_forward(net, obs, cache);
    std::vector<double> probs(logits.size());
    for (int i = 0; i < n_; ++i) {
        const int base = i * m_;
        double mx = logits[base];
        for (int j = 1; j < m_; ++j) mx = std::max(mx, logits[base + j]);
        double denom = 0.0;
        for (int j = 0; j < m_; ++j) {
            probs[base + j] = std::exp(logits[base + j] - mx);
            denom += probs[base + j];
        }
        for (int j = 0; j < m_; ++j) probs[base + j] /= denom;
    }
    return probs;
}

DlActor::Sample DlActor::sample(std::span<const double> obs, RngStream& rng) const {
    Sample s;
    s.probs = block_probs(obs, nullptr);
    s.alloc.resize(n_);
    s.log_prob = 0.0;
    for (int i = 0; i < n_; ++i) {
        const int base = i * m_;
        const double u = rng.uniform();
        double cum = 0.0;
        int pick = m_ - 1;
        for (int j = 0; j < m_; ++j) {
            cum += s.probs[base + j];
            if (u < cum) {
                pick = j;
                break;
            }
        }
        s.alloc[i] = pick;
        s.log_prob += std::log(s.probs[base + pick]);
    }
    return s;
}

std::vector<int> DlActor::greedy(std::span<const double> obs) const {
    const std::vector<double> probs = block_probs(obs, nullptr);
    std::vector<int> alloc(n_);
    for (int i = 0; i < n_; ++i) {
        const int base = i * m_;
        int best = 0;
        for (int j = 1; j < m_; ++j)
            if (probs[base + j] > probs[base + best]) best = j;
        alloc[i] = best;
    }
    return alloc;
}

double DlActor::log_prob(std::span<const double> obs, const std::vector<int>& action,
                         EvalCache* cache) const {
    MlpCache local;
    MlpCache* mc = cache ? &cache->cache : &local;
    const std::vector<double> probs = block_probs(obs, mc);
    double lp = 0.0;
    for (int i = 0; i < n_; ++i) lp += std::log(probs[i * m_ + action[i]]);
    if (cache) {
        cache->probs = probs;
        cache->action = action;
    }
    return lp;
}

void DlActor::log_prob_backward(const EvalCache& cache, double coeff, DlActor& grads) const {
    std::vector<double> dlogits(static_cast<std::size_t>(n_) * m_);
    for (int i = 0; i < n_; ++i) {
        const int base = i * m_;
        for (int j = 0; j < m_; ++j) {
            const double onehot = (j == cache.action[i]) ? 1.0 : 0.0;
            dlogits[base + j] = coeff * (onehot - cache.probs[base + j]);
        }
    }
    mlp_backward(net, cache.cache, dlogits, grads.net);
}

ParamRefs DlActor::params() {
    ParamRefs refs;
    append_mlp_refs(refs, net, "dl_actor");
    return refs;
}

DlActor DlActor::zeros() const {
    DlActor g = *this;
    zero_grads(g.net);
    return g;
}

// ---------------------------------------------------------------------------
// UlActor

UlActor::UlActor(int obs_dim, int n_ues, const std::vector<int>& hidden, double logstd_init,
                 RngStream& rng)
    : n_(n_ues) {
    net = make_mlp(with_output(hidden, obs_dim, n_ues), false, rng);
    log_std.assign(n_ues, logstd_init);
}

double UlActor::scale_power(double raw, double p_min, double p_max) {
    const double clamped = std::clamp(raw, 0.0, 1.0);
    return p_min + clamped * (p_max - p_min);
}

UlActor::Sample UlActor::sample(std::span<const double> obs, RngStream& rng,
                                double p_min, double p_max) const {
    const std::vector<double> mean = mlp_forward(net, obs, nullptr);
    Sample s;
    s.raw.resize(n_);
    s.powers.resize(n_);
    s.log_prob = 0.0;
    for (int i = 0; i < n_; ++i) {
        const double sigma = std::exp(log_std[i]);
        const double z = rng.normal();
        s.raw[i] = mean[i] + sigma * z;
        s.powers[i] = scale_power(s.raw[i], p_min, p_max);
        s.log_prob += -0.5 * z * z - log_std[i] - kLogSqrt2Pi;
    }
    return s;
}

std::vector<double> UlActor::greedy_powers(std::span<const double> obs,
                                           double p_min, double p_max) const {
    const std::vector<double> mean = mlp_forward(net, obs, nullptr);
    std::vector<double> powers(n_);
    for (int i = 0; i < n_; ++i) powers[i] = scale_power(mean[i], p_min, p_max);
    return powers;
}

double UlActor::log_prob(std::span<const double> obs, const std::vector<double>& raw,
                         EvalCache* cache) const {
    MlpCache local;
    MlpCache* mc = cache ? &cache->cache : &local;
    const std::vector<double> mean = mlp_forward(net, obs, mc);
    double lp = 0.0;
    for (int i = 0; i < n_; ++i) {
        const double sigma = std::exp(log_std[i]);
        const double z = (raw[i] - mean[i]) / sigma;
        lp += -0.5 * z * z - log_std[i] - kLogSqrt2Pi;
    }
    if (cache) {
        cache->mean = mean;
        cache->raw = raw;
    }
    return lp;
}

void UlActor::log_prob_backward(const EvalCache& cache, double coeff, UlActor& grads) const {
    std::vector<double> dmean(n_);
    for (int i = 0; i < n_; ++i) {
        const double sigma = std::exp(log_std[i]);
        const double z = (cache.raw[i] - cache.mean[i]) / sigma;
        dmean[i] = coeff * z / sigma;
        grads.log_std[i] += coeff * (z * z - 1.0);
    }
    mlp_backward(net, cache.cache, dmean, grads.net);
}

ParamRefs UlActor::params() {
    ParamRefs refs;
    append_mlp_refs(refs, net, "ul_actor");
    refs.names.push_back("ul_actor.log_std");
    refs.slots.push_back(&log_std);
    return refs;
}

UlActor UlActor::zeros() const {
    UlActor g = *this;
    zero_grads(g.net);
    std::fill(g.log_std.begin(), g.log_std.end(), 0.0);
    return g;
}

// ---------------------------------------------------------------------------
// MalsCritic

MalsCritic::MalsCritic(int obs_dim_dl, int obs_dim_ul, const std::vector<int>& hidden,
                       RngStream& rng) {
    if (hidden.empty()) throw std::invalid_argument("MalsCritic: hidden_sizes must be nonempty");
    const int adapter_width = hidden.front();
    adapter_dl = make_mlp({obs_dim_dl, adapter_width}, true, rng);
    adapter_ul = make_mlp({obs_dim_ul, adapter_width}, true, rng);
    std::vector<int> backbone_sizes(hidden.begin(), hidden.end());
    if (backbone_sizes.size() >= 2) {
        backbone = make_mlp(backbone_sizes, true, rng);
    } else {
        backbone = Mlp{};  // adapter output feeds the heads directly
    }
    const int top = hidden.back();
    head_dl = make_mlp({top, 1}, false, rng);
    head_ul = make_mlp({top, 1}, false, rng);
}

double MalsCritic::value(std::span<const double> obs, CriticHead head, EvalCache* cache) const {
    const Mlp& adapter = head == CriticHead::dl ? adapter_dl : adapter_ul;
    const Mlp& out_head = head == CriticHead::dl ? head_dl : head_ul;
    MlpCache la, lb, lh;
    MlpCache* ca = cache ? &cache->adapter : &la;
    MlpCache* cb = cache ? &cache->backbone : &lb;
    MlpCache* ch = cache ? &cache->head : &lh;
    const std::vector<double> a = mlp_forward(adapter, obs, ca);
    const std::vector<double> z = mlp_forward(backbone, a, cb);
    const std::vector<double> v = mlp_forward(out_head, z, ch);
    if (cache) cache->which = head;
    return v[0];
}

void MalsCritic::value_backward(const EvalCache& cache, double coeff, MalsCritic& grads) const {
    const Mlp& out_head = cache.which == CriticHead::dl ? head_dl : head_ul;
    Mlp& ghead = cache.which == CriticHead::dl ? grads.head_dl : grads.head_ul;
    const Mlp& adapter = cache.which == CriticHead::dl ? adapter_dl : adapter_ul;
    Mlp& gadapter = cache.which == CriticHead::dl ? grads.adapter_dl : grads.adapter_ul;
    const std::vector<double> dv{coeff};
    std::vector<double> dz = mlp_backward(out_head, cache.head, dv, ghead);
    std::vector<double> da = mlp_backward(backbone, cache.backbone, dz, grads.backbone);
    mlp_backward(adapter, cache.adapter, da, gadapter);
}

ParamRefs MalsCritic::params() {
    ParamRefs refs;
    append_mlp_refs(refs, adapter_dl, "critic.adapter_dl");
    append_mlp_refs(refs, adapter_ul, "critic.adapter_ul");
    append_mlp_refs(refs, backbone, "critic.backbone");
    append_mlp_refs(refs, head_dl, "critic.head_dl");
    append_mlp_refs(refs, head_ul, "critic.head_ul");
    return refs;
}

MalsCritic MalsCritic::zeros() const {
    MalsCritic g = *this;
    zero_grads(g.adapter_dl);
    zero_grads(g.adapter_ul);
    zero_grads(g.backbone);
    zero_grads(g.head_dl);
    zero_grads(g.head_ul);
    return g;
}

// ---------------------------------------------------------------------------
// SingleCritic

SingleCritic::SingleCritic(int obs_dim, const std::vector<int>& hidden, RngStream& rng) {
    net = make_mlp(with_output(hidden, obs_dim, 1), false, rng);
}

double SingleCritic::value(std::span<const double> obs, MlpCache* cache) const {
    return mlp_forward(net, obs, cache)[0];
}

void SingleCritic::value_backward(const MlpCache& cache, double coeff, SingleCritic& grads) const {
    const std::vector<double> dv{coeff};
    mlp_backward(net, cache, dv, grads.net);
}

ParamRefs SingleCritic::params() {
    ParamRefs refs;
    append_mlp_refs(refs, net, "critic");
    return refs;
}

SingleCritic SingleCritic::zeros() const {
    SingleCritic g = *this;
    zero_grads(g.net);
    return g;
}

}  // namespace p2emec
