#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "p2emec/config.hpp"
#include "p2emec/env.hpp"
#include "p2emec/metrics.hpp"
#include "p2emec/nn.hpp"
#include "p2emec/reward.hpp"

namespace p2emec {

// One environment iteration as stored in the trajectory buffer. The DL reward
// is finalized after the UL phase because it embeds a share of the same
// step's UL reward.
struct Transition {
    std::vector<double> s_d;
    std::vector<double> s_u;
    std::vector<double> s_d_next;
    std::vector<double> s_u_next;
    std::vector<int> alloc;
    std::vector<double> ul_raw;     // pre-clamp Gaussian action
    std::vector<double> ul_powers;  // scaled powers applied to the environment
    double logp_d = 0.0;
    double logp_u = 0.0;
    double r_d = 0.0;
    double r_u = 0.0;
    double r_common = 0.0;  // undecomposed objective reward (centralized baseline)
    bool done = false;
    int step_index = 0;
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> value_targets;
};

// Truncated generalized advantage estimation over one trajectory buffer.
// values/next_values are target-critic evaluations of s^t and s^{t+1};
// episode boundaries (done flags) reset the recursion and drop the bootstrap.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const double> next_values, std::span<const std::uint8_t> dones,
                      double gamma, double lambda);

// Clipped-surrogate loss over one minibatch, optionally with its analytic
// parameter gradient (for the finite-difference suite). Throws if a
// probability ratio is non-finite (batch rejected with a diagnostic).
double ppo_loss_dl(const DlActor& actor, const std::vector<std::vector<double>>& states,
                   const std::vector<std::vector<int>>& actions,
                   const std::vector<double>& old_logprobs,
                   const std::vector<double>& advantages,
                   std::span<const std::size_t> batch, double clip_eps, DlActor* grads);
double ppo_loss_ul(const UlActor& actor, const std::vector<std::vector<double>>& states,
                   const std::vector<std::vector<double>>& actions,
                   const std::vector<double>& old_logprobs,
                   const std::vector<double>& advantages,
                   std::span<const std::size_t> batch, double clip_eps, UlActor* grads);

// Clipped-surrogate policy update on one minibatch; one Adam step. Returns
// the minibatch loss (negated surrogate). The same code path serves both
// actors through the log-prob abstraction. Throws if a probability ratio is
// non-finite (batch rejected).
double ppo_update_dl(DlActor& actor, const std::vector<std::vector<double>>& states,
                     const std::vector<std::vector<int>>& actions,
                     const std::vector<double>& old_logprobs,
                     const std::vector<double>& advantages,
                     std::span<const std::size_t> batch, double clip_eps, double lr,
                     AdamState& adam);
double ppo_update_ul(UlActor& actor, const std::vector<std::vector<double>>& states,
                     const std::vector<std::vector<double>>& actions,
                     const std::vector<double>& old_logprobs,
                     const std::vector<double>& advantages,
                     std::span<const std::size_t> batch, double clip_eps, double lr,
                     AdamState& adam);

struct MalsCriticLosses {
    double loss_ul = 0.0;
    double loss_dl = 0.0;
    double total = 0.0;
};

// Loss-sharing critic loss, optionally with its gradient.
MalsCriticLosses mals_critic_loss(const MalsCritic& critic,
                                  const std::vector<std::vector<double>>& dl_states,
                                  const std::vector<double>& dl_targets,
                                  const std::vector<std::vector<double>>& ul_states,
                                  const std::vector<double>& ul_targets,
                                  std::span<const std::size_t> batch, double kappa1,
                                  double kappa2, MalsCritic* grads);

// Loss-sharing critic update: both head regressions are weight-summed into a
// single loss and one backward/Adam step updates adapters, backbone, and
// heads jointly.
MalsCriticLosses mals_critic_update(MalsCritic& critic,
                                    const std::vector<std::vector<double>>& dl_states,
                                    const std::vector<double>& dl_targets,
                                    const std::vector<std::vector<double>>& ul_states,
                                    const std::vector<double>& ul_targets,
                                    std::span<const std::size_t> batch, double kappa1,
                                    double kappa2, double lr, AdamState& adam);

// Plain mean-squared-error value regression (independent / centralized
// baselines).
double single_critic_update(SingleCritic& critic, const std::vector<std::vector<double>>& states,
                            const std::vector<double>& targets,
                            std::span<const std::size_t> batch, double lr, AdamState& adam);

// Hard copy of the live critic into the target.
template <typename Critic>
void sync_target(const Critic& critic, Critic& target) {
    target = critic;
}

struct UpdateRecord {
    long long steps_done = 0;
    double loss_actor_dl = 0.0;
    double loss_actor_ul = 0.0;
    double loss_critic_ul = 0.0;
    double loss_critic_dl = 0.0;
    double loss_critic_total = 0.0;
};

struct TrainingLog {
    std::vector<UpdateRecord> updates;
    std::vector<MetricsRecord> episodes;
    double wall_clock_s = 0.0;
};

struct TrainHooks {
    std::ostream* log_stream = nullptr;  // JSONL, one record per update and per episode
    std::ostream* trace = nullptr;       // environment phase trace
    std::filesystem::path checkpoint_path;  // written at the end of training if nonempty
};

struct TrainResult {
    TrainingLog log;
    DlActor dl_actor;
    UlActor ul_actor;
};

enum class Algorithm { mals, ida, ctde, random_policy };

Algorithm algorithm_from_string(const std::string& name);
std::string algorithm_name(Algorithm algo);

// The proposed loss-sharing trainer and the two learned baselines.
TrainResult train_mals(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                       const TrainHooks& hooks = {});
TrainResult train_ida(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                      const TrainHooks& hooks = {});
TrainResult train_ctde(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                       const TrainHooks& hooks = {});
TrainResult train_algorithm(Algorithm algo, const NetworkConfig& net_cfg,
                            const TrainConfig& train_cfg, const TrainHooks& hooks = {});

// Uniform random allocation and power selection; logs metrics, learns nothing.
std::vector<MetricsRecord> run_random(const NetworkConfig& net_cfg, long long episodes,
                                      std::uint64_t seed, const TrainHooks& hooks = {});

// Samplers used by the random baseline (exposed for distribution tests).
std::vector<int> random_allocation(RngStream& rng, int n_ues, int m_mbs);
std::vector<double> random_powers(RngStream& rng, int n_ues, double p_min, double p_max);

// Greedy evaluation of trained actors: argmax allocation, mean power.
std::vector<MetricsRecord> evaluate_policy(const NetworkConfig& net_cfg, const DlActor& dl_actor,
                                           const UlActor& ul_actor, long long episodes,
                                           std::uint64_t seed);

// Builds the parameter set stored in a checkpoint for the given algorithm.
struct ModelSet {
    DlActor dl_actor;
    UlActor ul_actor;
    MalsCritic mals_critic;     // mals only
    SingleCritic critic_dl;     // ida
    SingleCritic critic_ul;     // ida
    SingleCritic critic_joint;  // ctde
    Algorithm algo = Algorithm::mals;

    ParamRefs checkpoint_params();
};

ModelSet make_models(Algorithm algo, const NetworkConfig& net_cfg, const TrainConfig& train_cfg);

}  // namespace p2emec
