#include "p2emec/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "p2emec/checkpoint.hpp"
#include "p2emec/text.hpp"

namespace p2emec {

namespace {

void append_refs(ParamRefs& dst, ParamRefs src) {
    dst.names.insert(dst.names.end(), src.names.begin(), src.names.end());
    dst.slots.insert(dst.slots.end(), src.slots.begin(), src.slots.end());
}

void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

void normalize_in_place(std::vector<double>& v) {
    if (v.empty()) return;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double denom = std::sqrt(var) + 1e-8;
    for (double& x : v) x = (x - mean) / denom;
}

// Shared clipped-surrogate core; Actor supplies log_prob / log_prob_backward.
template <typename Actor, typename Action>
double clipped_surrogate(const Actor& actor, const std::vector<std::vector<double>>& states,
                         const std::vector<Action>& actions,
                         const std::vector<double>& old_logprobs,
                         const std::vector<double>& advantages,
                         std::span<const std::size_t> batch, double clip_eps, Actor* grads) {
    if (batch.empty()) throw std::invalid_argument("ppo update: empty minibatch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const std::size_t i : batch) {
        typename Actor::EvalCache cache;
        const double lp_new = actor.log_prob(states[i], actions[i], grads ? &cache : nullptr);
        const double ratio = std::exp(lp_new - old_logprobs[i]);
        if (!std::isfinite(ratio))
            throw std::runtime_error("ppo update: non-finite probability ratio at sample " +
                                     std::to_string(i) + " (log-prob " + format_double(lp_new) + ")");
        const double adv = advantages[i];
        const double surr1 = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
        const double surr2 = clipped * adv;
        loss -= inv_b * std::min(surr1, surr2);
        if (grads && surr1 <= surr2) {
            // d(-surr1)/d(logp) = -ratio * adv; the clipped branch has zero gradient.
            actor.log_prob_backward(cache, -inv_b * ratio * adv, *grads);
        }
    }
    return loss;
}

long long now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void emit_episode(const MetricsRecord& r, std::ostream* stream) {
    if (!stream) return;
    std::string line = "{\"type\":\"episode\",\"episode\":" + std::to_string(r.episode);
    line += ",\"steps\":" + std::to_string(r.steps);
    line += ",\"depleted\":" + std::string(r.depleted ? "true" : "false");
    line += ",\"avg_dl_delay_s\":" + format_double(r.avg_dl_delay);
    line += ",\"avg_ul_delay_s\":" + format_double(r.avg_ul_delay);
    line += ",\"min_cum_earning\":" + format_double(r.min_cum_earning);
    line += ",\"max_cum_battery_pct\":" + format_double(r.max_cum_battery_pct);
    line += ",\"dl_reward_sum\":" + format_double(r.dl_reward_sum);
    line += ",\"ul_reward_sum\":" + format_double(r.ul_reward_sum);
    line += "}";
    (*stream) << line << '\n';
}

void emit_update(const UpdateRecord& u, std::ostream* stream) {
    if (!stream) return;
    std::string line = "{\"type\":\"update\",\"steps\":" + std::to_string(u.steps_done);
    line += ",\"loss_actor_dl\":" + format_double(u.loss_actor_dl);
    line += ",\"loss_actor_ul\":" + format_double(u.loss_actor_ul);
    line += ",\"loss_critic_ul\":" + format_double(u.loss_critic_ul);
    line += ",\"loss_critic_dl\":" + format_double(u.loss_critic_dl);
    line += ",\"loss_critic_total\":" + format_double(u.loss_critic_total);
    line += "}";
    (*stream) << line << '\n';
}

void emit_summary(const TrainingLog& log, std::ostream* stream) {
    if (!stream) return;
    (*stream) << "{\"type\":\"summary\",\"episodes\":" << log.episodes.size()
              << ",\"updates\":" << log.updates.size()
              << ",\"wall_clock_s\":" << format_double(log.wall_clock_s) << "}\n";
}

// Per-episode bookkeeping shared by every policy driver.
struct EpisodeTracker {
    EpisodeLedger ledger;
    double dl_sum = 0.0;
    double ul_sum = 0.0;

    explicit EpisodeTracker(int n) : ledger(n) {}
    void restart(int n) {
        ledger = EpisodeLedger(n);
        dl_sum = 0.0;
        ul_sum = 0.0;
    }
};

struct RolloutContext {
    MecEnv env;
    RewardWeights weights;
    RngStream policy_rng;
    EpisodeTracker tracker;
    std::vector<double> pending_dl_obs;  // observation for the next iteration
    long long steps_done = 0;
    long long episodes_done = 0;

    RolloutContext(const NetworkConfig& cfg, std::uint64_t seed)
        : env(cfg, seed),
          weights(RewardWeights::from(cfg)),
          policy_rng(RngStream(seed).fork("policy")),
          tracker(cfg.n_ues) {
        pending_dl_obs = env.dl_observation();
    }
};

// Runs iterations until the buffer holds `horizon` transitions or the step
// budget is exhausted. Completed episodes are logged as metrics records.
void collect_rollout(RolloutContext& ctx, const DlActor& dl_actor, const UlActor& ul_actor,
                     long long total_steps, int horizon, std::vector<Transition>& buffer,
                     TrainingLog& log, const TrainHooks& hooks) {
    const NetworkConfig& cfg = ctx.env.config();
    const std::size_t obs_len = static_cast<std::size_t>(cfg.n_ues) * cfg.m_mbs + cfg.n_ues;
    while (static_cast<int>(buffer.size()) < horizon && ctx.steps_done < total_steps) {
        Transition tr;
        tr.step_index = ctx.env.world().step;
        tr.s_d = ctx.pending_dl_obs;
        const DlActor::Sample dl_sample = dl_actor.sample(tr.s_d, ctx.policy_rng);
        tr.alloc = dl_sample.alloc;
        tr.logp_d = dl_sample.log_prob;
        const DlOutcome dl_out = ctx.env.step_downlink(tr.alloc);
        ctx.tracker.ledger.record_dl(dl_out);

        tr.s_u = ctx.env.ul_observation();
        const UlActor::Sample ul_sample =
            ul_actor.sample(tr.s_u, ctx.policy_rng, cfg.p_ul_min, cfg.p_ul_max);
        tr.ul_raw = ul_sample.raw;
        tr.ul_powers = ul_sample.powers;
        tr.logp_u = ul_sample.log_prob;
        const MecEnv::UlStepResult ul_res = ctx.env.step_uplink(tr.ul_powers);
        ctx.tracker.ledger.record_ul(ul_res.outcome);
        if (ul_res.depleted) ctx.tracker.ledger.mark_depleted();

        tr.r_u = uplink_reward(ctx.tracker.ledger, ctx.weights, ul_res.depleted);
        tr.r_d = downlink_reward(ctx.tracker.ledger, ctx.weights, ul_res.depleted, tr.r_u);
        tr.r_common = common_reward(ctx.tracker.ledger, ctx.weights, ul_res.depleted);
        tr.done = ul_res.done;
        ctx.tracker.dl_sum += tr.r_d;
        ctx.tracker.ul_sum += tr.r_u;

        if (ul_res.done) {
            tr.s_d_next.assign(obs_len, 0.0);
            tr.s_u_next.assign(obs_len, 0.0);
            const MetricsRecord rec = make_metrics_record(ctx.episodes_done, ctx.tracker.ledger,
                                                          ctx.tracker.dl_sum, ctx.tracker.ul_sum);
            log.episodes.push_back(rec);
            emit_episode(rec, hooks.log_stream);
            ++ctx.episodes_done;
            ctx.tracker.restart(cfg.n_ues);
            ctx.env.reset();
            ctx.pending_dl_obs = ctx.env.dl_observation();
        } else {
            tr.s_d_next = ctx.env.dl_observation();
            tr.s_u_next = ctx.env.ul_observation_lookahead();
            ctx.pending_dl_obs = tr.s_d_next;
        }
        buffer.push_back(std::move(tr));
        ++ctx.steps_done;
    }
}

std::vector<std::uint8_t> done_flags(const std::vector<Transition>& buf) {
    std::vector<std::uint8_t> d(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) d[i] = buf[i].done ? 1 : 0;
    return d;
}

void check_finite_losses(const UpdateRecord& u, long long steps, const TrainHooks& hooks,
                         ParamRefs params, const std::string& tag) {
    const bool ok = std::isfinite(u.loss_actor_dl) && std::isfinite(u.loss_actor_ul) &&
                    std::isfinite(u.loss_critic_total);
    if (ok) return;
    if (!hooks.checkpoint_path.empty()) {
        save_checkpoint(hooks.checkpoint_path.string() + ".diag", params, tag);
    }
    throw std::runtime_error("non-finite loss at step " + std::to_string(steps) +
                             "; diagnostic checkpoint " +
                             (hooks.checkpoint_path.empty()
                                  ? std::string("not written (no checkpoint path)")
                                  : hooks.checkpoint_path.string() + ".diag"));
}

}  // namespace

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const double> next_values, std::span<const std::uint8_t> dones,
                      double gamma, double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n || next_values.size() != n || dones.size() != n)
        throw std::invalid_argument("compute_gae: array length mismatch");
    GaeResult out;
    out.advantages.resize(n);
    out.value_targets.resize(n);
    double running = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        const double not_done = dones[k] ? 0.0 : 1.0;
        const double delta = rewards[k] + gamma * next_values[k] * not_done - values[k];
        running = delta + gamma * lambda * not_done * running;
        out.advantages[k] = running;
        out.value_targets[k] = running + values[k];
    }
    return out;
}

double ppo_loss_dl(const DlActor& actor, const std::vector<std::vector<double>>& states,
                   const std::vector<std::vector<int>>& actions,
                   const std::vector<double>& old_logprobs, const std::vector<double>& advantages,
                   std::span<const std::size_t> batch, double clip_eps, DlActor* grads) {
    return clipped_surrogate(actor, states, actions, old_logprobs, advantages, batch, clip_eps,
                             grads);
}

double ppo_loss_ul(const UlActor& actor, const std::vector<std::vector<double>>& states,
                   const std::vector<std::vector<double>>& actions,
                   const std::vector<double>& old_logprobs, const std::vector<double>& advantages,
                   std::span<const std::size_t> batch, double clip_eps, UlActor* grads) {
    return clipped_surrogate(actor, states, actions, old_logprobs, advantages, batch, clip_eps,
                             grads);
}

double ppo_update_dl(DlActor& actor, const std::vector<std::vector<double>>& states,
                     const std::vector<std::vector<int>>& actions,
                     const std::vector<double>& old_logprobs,
                     const std::vector<double>& advantages, std::span<const std::size_t> batch,
                     double clip_eps, double lr, AdamState& adam) {
    DlActor grads = actor.zeros();
    const double loss =
        ppo_loss_dl(actor, states, actions, old_logprobs, advantages, batch, clip_eps, &grads);
    adam_step(actor.params(), grads.params(), adam, lr);
    return loss;
}

double ppo_update_ul(UlActor& actor, const std::vector<std::vector<double>>& states,
                     const std::vector<std::vector<double>>& actions,
                     const std::vector<double>& old_logprobs,
                     const std::vector<double>& advantages, std::span<const std::size_t> batch,
                     double clip_eps, double lr, AdamState& adam) {
    UlActor grads = actor.zeros();
    const double loss =
        ppo_loss_ul(actor, states, actions, old_logprobs, advantages, batch, clip_eps, &grads);
    adam_step(actor.params(), grads.params(), adam, lr);
    return loss;
}

MalsCriticLosses mals_critic_loss(const MalsCritic& critic,
                                  const std::vector<std::vector<double>>& dl_states,
                                  const std::vector<double>& dl_targets,
                                  const std::vector<std::vector<double>>& ul_states,
                                  const std::vector<double>& ul_targets,
                                  std::span<const std::size_t> batch, double kappa1, double kappa2,
                                  MalsCritic* grads) {
    if (batch.empty()) throw std::invalid_argument("mals critic update: empty minibatch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    MalsCriticLosses losses;
    for (const std::size_t i : batch) {
        MalsCritic::EvalCache cache_u;
        const double v_u = critic.value(ul_states[i], CriticHead::ul, grads ? &cache_u : nullptr);
        const double err_u = v_u - ul_targets[i];
        losses.loss_ul += inv_b * err_u * err_u;
        if (grads) critic.value_backward(cache_u, kappa1 * inv_b * 2.0 * err_u, *grads);

        MalsCritic::EvalCache cache_d;
        const double v_d = critic.value(dl_states[i], CriticHead::dl, grads ? &cache_d : nullptr);
        const double err_d = v_d - dl_targets[i];
        losses.loss_dl += inv_b * err_d * err_d;
        if (grads) critic.value_backward(cache_d, kappa2 * inv_b * 2.0 * err_d, *grads);
    }
    losses.total = kappa1 * losses.loss_ul + kappa2 * losses.loss_dl;
    return losses;
}

MalsCriticLosses mals_critic_update(MalsCritic& critic,
                                    const std::vector<std::vector<double>>& dl_states,
                                    const std::vector<double>& dl_targets,
                                    const std::vector<std::vector<double>>& ul_states,
                                    const std::vector<double>& ul_targets,
                                    std::span<const std::size_t> batch, double kappa1,
                                    double kappa2, double lr, AdamState& adam) {
    MalsCritic grads = critic.zeros();
    const MalsCriticLosses losses = mals_critic_loss(critic, dl_states, dl_targets, ul_states,
                                                     ul_targets, batch, kappa1, kappa2, &grads);
    adam_step(critic.params(), grads.params(), adam, lr);
    return losses;
}

double single_critic_update(SingleCritic& critic, const std::vector<std::vector<double>>& states,
                            const std::vector<double>& targets,
                            std::span<const std::size_t> batch, double lr, AdamState& adam) {
    if (batch.empty()) throw std::invalid_argument("critic update: empty minibatch");
    SingleCritic grads = critic.zeros();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const std::size_t i : batch) {
        MlpCache cache;
        const double v = critic.value(states[i], &cache);
        const double err = v - targets[i];
        loss += inv_b * err * err;
        critic.value_backward(cache, inv_b * 2.0 * err, grads);
    }
    adam_step(critic.params(), grads.params(), adam, lr);
    return loss;
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "mals") return Algorithm::mals;
    if (name == "ida") return Algorithm::ida;
    if (name == "ctde") return Algorithm::ctde;
    if (name == "random") return Algorithm::random_policy;
    throw std::invalid_argument("unknown algorithm: '" + name + "' (expected mals|ida|ctde|random)");
}

std::string algorithm_name(Algorithm algo) {
    switch (algo) {
        case Algorithm::mals: return "mals";
        case Algorithm::ida: return "ida";
        case Algorithm::ctde: return "ctde";
        case Algorithm::random_policy: return "random";
    }
    throw std::logic_error("unreachable");
}

ModelSet make_models(Algorithm algo, const NetworkConfig& net_cfg, const TrainConfig& train_cfg) {
    const int obs_dim = net_cfg.n_ues * net_cfg.m_mbs + net_cfg.n_ues;
    const RngStream root(train_cfg.seed);
    RngStream init_dl = root.fork("init-dl-actor");
    RngStream init_ul = root.fork("init-ul-actor");
    RngStream init_critic = root.fork("init-critic");
    ModelSet ms;
    ms.algo = algo;
    ms.dl_actor = DlActor(obs_dim, net_cfg.n_ues, net_cfg.m_mbs, train_cfg.hidden_sizes, init_dl);
    ms.ul_actor = UlActor(obs_dim, net_cfg.n_ues, train_cfg.hidden_sizes,
                          train_cfg.gaussian_logstd_init, init_ul);
    switch (algo) {
        case Algorithm::mals:
            ms.mals_critic = MalsCritic(obs_dim, obs_dim, train_cfg.hidden_sizes, init_critic);
            break;
        case Algorithm::ida: {
            RngStream init_critic_ul = root.fork("init-critic-ul");
            ms.critic_dl = SingleCritic(obs_dim, train_cfg.hidden_sizes, init_critic);
            ms.critic_ul = SingleCritic(obs_dim, train_cfg.hidden_sizes, init_critic_ul);
            break;
        }
        case Algorithm::ctde:
            ms.critic_joint = SingleCritic(2 * obs_dim, train_cfg.hidden_sizes, init_critic);
            break;
        case Algorithm::random_policy:
            break;
    }
    return ms;
}

ParamRefs ModelSet::checkpoint_params() {
    ParamRefs refs;
    append_refs(refs, dl_actor.params());
    append_refs(refs, ul_actor.params());
    switch (algo) {
        case Algorithm::mals:
            append_refs(refs, mals_critic.params());
            break;
        case Algorithm::ida: {
            ParamRefs c1;
            append_mlp_refs(c1, critic_dl.net, "critic_dl");
            append_mlp_refs(c1, critic_ul.net, "critic_ul");
            append_refs(refs, std::move(c1));
            break;
        }
        case Algorithm::ctde: {
            ParamRefs c;
            append_mlp_refs(c, critic_joint.net, "critic_joint");
            append_refs(refs, std::move(c));
            break;
        }
        case Algorithm::random_policy:
            break;
    }
    return refs;
}

TrainResult train_mals(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                       const TrainHooks& hooks) {
    net_cfg.validate();
    train_cfg.validate();
    const long long t0 = now_ms();
    ModelSet ms = make_models(Algorithm::mals, net_cfg, train_cfg);
    MalsCritic target = ms.mals_critic;
    AdamState adam_dl = make_adam_state(ms.dl_actor.params());
    AdamState adam_ul = make_adam_state(ms.ul_actor.params());
    AdamState adam_critic = make_adam_state(ms.mals_critic.params());
    RngStream shuffle_rng = RngStream(train_cfg.seed).fork("shuffle");

    RolloutContext ctx(net_cfg, train_cfg.seed);
    if (hooks.trace) ctx.env.set_trace(hooks.trace);
    TrainingLog log;
    std::vector<Transition> buffer;
    buffer.reserve(train_cfg.horizon);
    long long update_round = 0;

    while (ctx.steps_done < train_cfg.total_steps) {
        buffer.clear();
        collect_rollout(ctx, ms.dl_actor, ms.ul_actor, train_cfg.total_steps, train_cfg.horizon,
                        buffer, log, hooks);
        if (buffer.empty()) break;
        const std::size_t n = buffer.size();

        std::vector<std::vector<double>> s_d(n), s_u(n);
        std::vector<std::vector<int>> allocs(n);
        std::vector<std::vector<double>> raws(n);
        std::vector<double> r_d(n), r_u(n), lp_d(n), lp_u(n);
        std::vector<double> v_d(n), v_d_next(n), v_u(n), v_u_next(n);
        const std::vector<std::uint8_t> dones = done_flags(buffer);
        for (std::size_t i = 0; i < n; ++i) {
            const Transition& tr = buffer[i];
            s_d[i] = tr.s_d;
            s_u[i] = tr.s_u;
            allocs[i] = tr.alloc;
            raws[i] = tr.ul_raw;
            r_d[i] = tr.r_d;
            r_u[i] = tr.r_u;
            lp_d[i] = tr.logp_d;
            lp_u[i] = tr.logp_u;
            v_d[i] = target.value(tr.s_d, CriticHead::dl);
            v_u[i] = target.value(tr.s_u, CriticHead::ul);
            v_d_next[i] = tr.done ? 0.0 : target.value(tr.s_d_next, CriticHead::dl);
            v_u_next[i] = tr.done ? 0.0 : target.value(tr.s_u_next, CriticHead::ul);
        }
        GaeResult gae_d = compute_gae(r_d, v_d, v_d_next, dones, train_cfg.gamma, train_cfg.lambda_gae);
        GaeResult gae_u = compute_gae(r_u, v_u, v_u_next, dones, train_cfg.gamma, train_cfg.lambda_gae);
        if (train_cfg.normalize_advantages) {
            normalize_in_place(gae_d.advantages);
            normalize_in_place(gae_u.advantages);
        }

        UpdateRecord rec;
        rec.steps_done = ctx.steps_done;
        long long groups = 0;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
            shuffle_indices(order, shuffle_rng);
            for (std::size_t start = 0; start < n; start += train_cfg.group_size) {
                const std::size_t len = std::min<std::size_t>(train_cfg.group_size, n - start);
                const std::span<const std::size_t> group(order.data() + start, len);
                rec.loss_actor_dl += ppo_update_dl(ms.dl_actor, s_d, allocs, lp_d,
                                                   gae_d.advantages, group, train_cfg.clip_eps,
                                                   train_cfg.lr_actor, adam_dl);
                rec.loss_actor_ul += ppo_update_ul(ms.ul_actor, s_u, raws, lp_u, gae_u.advantages,
                                                   group, train_cfg.clip_eps, train_cfg.lr_actor,
                                                   adam_ul);
                const MalsCriticLosses cl = mals_critic_update(
                    ms.mals_critic, s_d, gae_d.value_targets, s_u, gae_u.value_targets, group,
                    net_cfg.kappa1, net_cfg.kappa2, train_cfg.lr_critic, adam_critic);
                rec.loss_critic_ul += cl.loss_ul;
                rec.loss_critic_dl += cl.loss_dl;
                rec.loss_critic_total += cl.total;
                ++groups;
            }
        }
        rec.loss_actor_dl /= groups;
        rec.loss_actor_ul /= groups;
        rec.loss_critic_ul /= groups;
        rec.loss_critic_dl /= groups;
        rec.loss_critic_total /= groups;
        log.updates.push_back(rec);
        emit_update(rec, hooks.log_stream);
        check_finite_losses(rec, ctx.steps_done, hooks, ms.checkpoint_params(), "mals");

        ++update_round;
        if (update_round % train_cfg.target_sync_interval == 0) sync_target(ms.mals_critic, target);
    }

    log.wall_clock_s = static_cast<double>(now_ms() - t0) / 1000.0;
    emit_summary(log, hooks.log_stream);
    if (!hooks.checkpoint_path.empty())
        save_checkpoint(hooks.checkpoint_path, ms.checkpoint_params(), "mals");
    return {std::move(log), std::move(ms.dl_actor), std::move(ms.ul_actor)};
}

TrainResult train_ida(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                      const TrainHooks& hooks) {
    net_cfg.validate();
    train_cfg.validate();
    const long long t0 = now_ms();
    ModelSet ms = make_models(Algorithm::ida, net_cfg, train_cfg);
    SingleCritic target_dl = ms.critic_dl;
    SingleCritic target_ul = ms.critic_ul;
    AdamState adam_dl = make_adam_state(ms.dl_actor.params());
    AdamState adam_ul = make_adam_state(ms.ul_actor.params());
    AdamState adam_critic_dl = make_adam_state(ms.critic_dl.params());
    AdamState adam_critic_ul = make_adam_state(ms.critic_ul.params());
    RngStream shuffle_rng = RngStream(train_cfg.seed).fork("shuffle");

    RolloutContext ctx(net_cfg, train_cfg.seed);
    if (hooks.trace) ctx.env.set_trace(hooks.trace);
    TrainingLog log;
    std::vector<Transition> buffer;
    buffer.reserve(train_cfg.horizon);
    long long update_round = 0;

    while (ctx.steps_done < train_cfg.total_steps) {
        buffer.clear();
        collect_rollout(ctx, ms.dl_actor, ms.ul_actor, train_cfg.total_steps, train_cfg.horizon,
                        buffer, log, hooks);
        if (buffer.empty()) break;
        const std::size_t n = buffer.size();

        std::vector<std::vector<double>> s_d(n), s_u(n);
        std::vector<std::vector<int>> allocs(n);
        std::vector<std::vector<double>> raws(n);
        std::vector<double> r_d(n), r_u(n), lp_d(n), lp_u(n);
        std::vector<double> v_d(n), v_d_next(n), v_u(n), v_u_next(n);
        const std::vector<std::uint8_t> dones = done_flags(buffer);
        for (std::size_t i = 0; i < n; ++i) {
            const Transition& tr = buffer[i];
            s_d[i] = tr.s_d;
            s_u[i] = tr.s_u;
            allocs[i] = tr.alloc;
            raws[i] = tr.ul_raw;
            r_d[i] = tr.r_d;
            r_u[i] = tr.r_u;
            lp_d[i] = tr.logp_d;
            lp_u[i] = tr.logp_u;
            v_d[i] = target_dl.value(tr.s_d);
            v_u[i] = target_ul.value(tr.s_u);
            v_d_next[i] = tr.done ? 0.0 : target_dl.value(tr.s_d_next);
            v_u_next[i] = tr.done ? 0.0 : target_ul.value(tr.s_u_next);
        }
        GaeResult gae_d = compute_gae(r_d, v_d, v_d_next, dones, train_cfg.gamma, train_cfg.lambda_gae);
        GaeResult gae_u = compute_gae(r_u, v_u, v_u_next, dones, train_cfg.gamma, train_cfg.lambda_gae);
        if (train_cfg.normalize_advantages) {
            normalize_in_place(gae_d.advantages);
            normalize_in_place(gae_u.advantages);
        }

        UpdateRecord rec;
        rec.steps_done = ctx.steps_done;
        long long groups = 0;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
            shuffle_indices(order, shuffle_rng);
            for (std::size_t start = 0; start < n; start += train_cfg.group_size) {
                const std::size_t len = std::min<std::size_t>(train_cfg.group_size, n - start);
                const std::span<const std::size_t> group(order.data() + start, len);
                rec.loss_actor_dl += ppo_update_dl(ms.dl_actor, s_d, allocs, lp_d,
                                                   gae_d.advantages, group, train_cfg.clip_eps,
                                                   train_cfg.lr_actor, adam_dl);
                rec.loss_actor_ul += ppo_update_ul(ms.ul_actor, s_u, raws, lp_u, gae_u.advantages,
                                                   group, train_cfg.clip_eps, train_cfg.lr_actor,
                                                   adam_ul);
                const double l_d = single_critic_update(ms.critic_dl, s_d, gae_d.value_targets,
                                                        group, train_cfg.lr_critic, adam_critic_dl);
                const double l_u = single_critic_update(ms.critic_ul, s_u, gae_u.value_targets,
                                                        group, train_cfg.lr_critic, adam_critic_ul);
                rec.loss_critic_dl += l_d;
                rec.loss_critic_ul += l_u;
                rec.loss_critic_total += l_d + l_u;
                ++groups;
            }
        }
        rec.loss_actor_dl /= groups;
        rec.loss_actor_ul /= groups;
        rec.loss_critic_ul /= groups;
        rec.loss_critic_dl /= groups;
        rec.loss_critic_total /= groups;
        log.updates.push_back(rec);
        emit_update(rec, hooks.log_stream);
        check_finite_losses(rec, ctx.steps_done, hooks, ms.checkpoint_params(), "ida");

        ++update_round;
        if (update_round % train_cfg.target_sync_interval == 0) {
            sync_target(ms.critic_dl, target_dl);
            sync_target(ms.critic_ul, target_ul);
        }
    }

    log.wall_clock_s = static_cast<double>(now_ms() - t0) / 1000.0;
    emit_summary(log, hooks.log_stream);
    if (!hooks.checkpoint_path.empty())
        save_checkpoint(hooks.checkpoint_path, ms.checkpoint_params(), "ida");
    return {std::move(log), std::move(ms.dl_actor), std::move(ms.ul_actor)};
}

TrainResult train_ctde(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                       const TrainHooks& hooks) {
    net_cfg.validate();
    train_cfg.validate();
    const long long t0 = now_ms();
    ModelSet ms = make_models(Algorithm::ctde, net_cfg, train_cfg);
    SingleCritic target = ms.critic_joint;
    AdamState adam_dl = make_adam_state(ms.dl_actor.params());
    AdamState adam_ul = make_adam_state(ms.ul_actor.params());
    AdamState adam_critic = make_adam_state(ms.critic_joint.params());
    RngStream shuffle_rng = RngStream(train_cfg.seed).fork("shuffle");

    RolloutContext ctx(net_cfg, train_cfg.seed);
    if (hooks.trace) ctx.env.set_trace(hooks.trace);
    TrainingLog log;
    std::vector<Transition> buffer;
    buffer.reserve(train_cfg.horizon);
    long long update_round = 0;

    auto concat = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> out;
        out.reserve(a.size() + b.size());
        out.insert(out.end(), a.begin(), a.end());
        out.insert(out.end(), b.begin(), b.end());
        return out;
    };

    while (ctx.steps_done < train_cfg.total_steps) {
        buffer.clear();
        collect_rollout(ctx, ms.dl_actor, ms.ul_actor, train_cfg.total_steps, train_cfg.horizon,
                        buffer, log, hooks);
        if (buffer.empty()) break;
        const std::size_t n = buffer.size();

        std::vector<std::vector<double>> s_d(n), s_u(n), s_joint(n);
        std::vector<std::vector<int>> allocs(n);
        std::vector<std::vector<double>> raws(n);
        std::vector<double> r(n), lp_d(n), lp_u(n);
        std::vector<double> v(n), v_next(n);
        const std::vector<std::uint8_t> dones = done_flags(buffer);
        for (std::size_t i = 0; i < n; ++i) {
            const Transition& tr = buffer[i];
            s_d[i] = tr.s_d;
            s_u[i] = tr.s_u;
            s_joint[i] = concat(tr.s_d, tr.s_u);
            allocs[i] = tr.alloc;
            raws[i] = tr.ul_raw;
            r[i] = tr.r_common;
            lp_d[i] = tr.logp_d;
            lp_u[i] = tr.logp_u;
            v[i] = target.value(s_joint[i]);
            v_next[i] = tr.done ? 0.0 : target.value(concat(tr.s_d_next, tr.s_u_next));
        }
        GaeResult gae = compute_gae(r, v, v_next, dones, train_cfg.gamma, train_cfg.lambda_gae);
        if (train_cfg.normalize_advantages) normalize_in_place(gae.advantages);

        UpdateRecord rec;
        rec.steps_done = ctx.steps_done;
        long long groups = 0;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
            shuffle_indices(order, shuffle_rng);
            for (std::size_t start = 0; start < n; start += train_cfg.group_size) {
                const std::size_t len = std::min<std::size_t>(train_cfg.group_size, n - start);
                const std::span<const std::size_t> group(order.data() + start, len);
                rec.loss_actor_dl += ppo_update_dl(ms.dl_actor, s_d, allocs, lp_d, gae.advantages,
                                                   group, train_cfg.clip_eps, train_cfg.lr_actor,
                                                   adam_dl);
                rec.loss_actor_ul += ppo_update_ul(ms.ul_actor, s_u, raws, lp_u, gae.advantages,
                                                   group, train_cfg.clip_eps, train_cfg.lr_actor,
                                                   adam_ul);
                const double lc = single_critic_update(ms.critic_joint, s_joint, gae.value_targets,
                                                       group, train_cfg.lr_critic, adam_critic);
                rec.loss_critic_total += lc;
                ++groups;
            }
        }
        rec.loss_actor_dl /= groups;
        rec.loss_actor_ul /= groups;
        rec.loss_critic_total /= groups;
        log.updates.push_back(rec);
        emit_update(rec, hooks.log_stream);
        check_finite_losses(rec, ctx.steps_done, hooks, ms.checkpoint_params(), "ctde");

        ++update_round;
        if (update_round % train_cfg.target_sync_interval == 0) sync_target(ms.critic_joint, target);
    }

    log.wall_clock_s = static_cast<double>(now_ms() - t0) / 1000.0;
    emit_summary(log, hooks.log_stream);
    if (!hooks.checkpoint_path.empty())
        save_checkpoint(hooks.checkpoint_path, ms.checkpoint_params(), "ctde");
    return {std::move(log), std::move(ms.dl_actor), std::move(ms.ul_actor)};
}

TrainResult train_algorithm(Algorithm algo, const NetworkConfig& net_cfg,
                            const TrainConfig& train_cfg, const TrainHooks& hooks) {
    switch (algo) {
        case Algorithm::mals: return train_mals(net_cfg, train_cfg, hooks);
        case Algorithm::ida: return train_ida(net_cfg, train_cfg, hooks);
        case Algorithm::ctde: return train_ctde(net_cfg, train_cfg, hooks);
        case Algorithm::random_policy:
            throw std::invalid_argument("the random baseline does not train; use run_random");
    }
    throw std::logic_error("unreachable");
}

std::vector<int> random_allocation(RngStream& rng, int n_ues, int m_mbs) {
    std::vector<int> alloc(n_ues);
    for (int i = 0; i < n_ues; ++i) alloc[i] = static_cast<int>(rng.uniform_index(m_mbs));
    return alloc;
}

std::vector<double> random_powers(RngStream& rng, int n_ues, double p_min, double p_max) {
    std::vector<double> powers(n_ues);
    for (int i = 0; i < n_ues; ++i) powers[i] = rng.uniform(p_min, p_max);
    return powers;
}

std::vector<MetricsRecord> run_random(const NetworkConfig& net_cfg, long long episodes,
                                      std::uint64_t seed, const TrainHooks& hooks) {
    net_cfg.validate();
    MecEnv env(net_cfg, seed);
    if (hooks.trace) env.set_trace(hooks.trace);
    RngStream rng = RngStream(seed).fork("random-policy");
    const RewardWeights weights = RewardWeights::from(net_cfg);
    std::vector<MetricsRecord> records;
    records.reserve(episodes);
    for (long long ep = 0; ep < episodes; ++ep) {
        EpisodeTracker tracker(net_cfg.n_ues);
        bool done = false;
        while (!done) {
            const std::vector<int> alloc = random_allocation(rng, net_cfg.n_ues, net_cfg.m_mbs);
            const DlOutcome dl_out = env.step_downlink(alloc);
            tracker.ledger.record_dl(dl_out);
            const std::vector<double> powers =
                random_powers(rng, net_cfg.n_ues, net_cfg.p_ul_min, net_cfg.p_ul_max);
            const MecEnv::UlStepResult ul_res = env.step_uplink(powers);
            tracker.ledger.record_ul(ul_res.outcome);
            if (ul_res.depleted) tracker.ledger.mark_depleted();
            const double r_u = uplink_reward(tracker.ledger, weights, ul_res.depleted);
            const double r_d = downlink_reward(tracker.ledger, weights, ul_res.depleted, r_u);
            tracker.dl_sum += r_d;
            tracker.ul_sum += r_u;
            done = ul_res.done;
        }
        const MetricsRecord rec =
            make_metrics_record(ep, tracker.ledger, tracker.dl_sum, tracker.ul_sum);
        records.push_back(rec);
        emit_episode(rec, hooks.log_stream);
        env.reset();
    }
    return records;
}

std::vector<MetricsRecord> evaluate_policy(const NetworkConfig& net_cfg, const DlActor& dl_actor,
                                           const UlActor& ul_actor, long long episodes,
                                           std::uint64_t seed) {
    net_cfg.validate();
    MecEnv env(net_cfg, seed);
    const RewardWeights weights = RewardWeights::from(net_cfg);
    std::vector<MetricsRecord> records;
    records.reserve(episodes);
    for (long long ep = 0; ep < episodes; ++ep) {
        EpisodeTracker tracker(net_cfg.n_ues);
        bool done = false;
        while (!done) {
            const std::vector<int> alloc = dl_actor.greedy(env.dl_observation());
            const DlOutcome dl_out = env.step_downlink(alloc);
            tracker.ledger.record_dl(dl_out);
            const std::vector<double> powers =
                ul_actor.greedy_powers(env.ul_observation(), net_cfg.p_ul_min, net_cfg.p_ul_max);
            const MecEnv::UlStepResult ul_res = env.step_uplink(powers);
            tracker.ledger.record_ul(ul_res.outcome);
            if (ul_res.depleted) tracker.ledger.mark_depleted();
            const double r_u = uplink_reward(tracker.ledger, weights, ul_res.depleted);
            const double r_d = downlink_reward(tracker.ledger, weights, ul_res.depleted, r_u);
            tracker.dl_sum += r_d;
            tracker.ul_sum += r_u;
            done = ul_res.done;
        }
        records.push_back(make_metrics_record(ep, tracker.ledger, tracker.dl_sum, tracker.ul_sum));
        env.reset();
    }
    return records;
}

}  // namespace p2emec
