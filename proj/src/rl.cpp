#include "eqgrid/rl.hpp"

#include <algorithm>
#include <cmath>

#include "eqgrid/metrics.hpp"
#include "eqgrid/parallel.hpp"

namespace eqgrid::rl {

// ---------------------------------------------------------------------------
// Network.

Mlp::Mlp(int in, int hidden, int out) : in_(in), hidden_(hidden), out_(out) {
    w_.assign(static_cast<std::size_t>(hidden * in + hidden + hidden * hidden + hidden +
                                       out * hidden + out),
              0.0);
}

void Mlp::init(Rng& rng, double head_scale) {
    auto fill = [&](int offset, int rows, int cols) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int k = 0; k < rows * cols; ++k) w_[offset + k] = rng.uniform(-bound, bound);
        return offset + rows * cols;
    };
    int off = 0;
    off = fill(off, hidden_, in_);
    off += hidden_;  // b1 = 0
    off = fill(off, hidden_, hidden_);
    off += hidden_;  // b2 = 0
    const double bound = head_scale / std::sqrt(static_cast<double>(hidden_));
    for (int k = 0; k < out_ * hidden_; ++k) w_[off + k] = rng.uniform(-bound, bound);
}

std::vector<double> Mlp::forward(const double* x, Cache* cache) const {
    const int H = hidden_;
    const double* W1 = w_.data();
    const double* b1 = W1 + H * in_;
    const double* W2 = b1 + H;
    const double* b2 = W2 + H * H;
    const double* W3 = b2 + H;
    const double* b3 = W3 + out_ * H;

    std::vector<double> a1(H), a2(H), out(out_);
    for (int h = 0; h < H; ++h) {
        double acc = b1[h];
        for (int j = 0; j < in_; ++j) acc += W1[h * in_ + j] * x[j];
        a1[h] = std::tanh(acc);
    }
    for (int h = 0; h < H; ++h) {
        double acc = b2[h];
        for (int j = 0; j < H; ++j) acc += W2[h * H + j] * a1[j];
        a2[h] = std::tanh(acc);
    }
    for (int o = 0; o < out_; ++o) {
        double acc = b3[o];
        for (int j = 0; j < H; ++j) acc += W3[o * H + j] * a2[j];
        out[o] = acc;
    }
    if (cache) {
        cache->x.assign(x, x + in_);
        cache->a1 = a1;
        cache->a2 = a2;
    }
    return out;
}

void Mlp::backward(const Cache& cache, const std::vector<double>& dout,
                   std::vector<double>& grad) const {
    const int H = hidden_;
    const double* W2 = w_.data() + H * in_ + H;
    const double* W3 = W2 + H * H + H;
    double* gW1 = grad.data();
    double* gb1 = gW1 + H * in_;
    double* gW2 = gb1 + H;
    double* gb2 = gW2 + H * H;
    double* gW3 = gb2 + H;
    double* gb3 = gW3 + out_ * H;

    std::vector<double> da2(H, 0.0), da1(H, 0.0);
    for (int o = 0; o < out_; ++o) {
        gb3[o] += dout[o];
        for (int j = 0; j < H; ++j) {
            gW3[o * H + j] += dout[o] * cache.a2[j];
            da2[j] += dout[o] * W3[o * H + j];
        }
    }
    for (int h = 0; h < H; ++h) {
        const double dz2 = da2[h] * (1.0 - cache.a2[h] * cache.a2[h]);
        gb2[h] += dz2;
        for (int j = 0; j < H; ++j) {
            gW2[h * H + j] += dz2 * cache.a1[j];
            da1[j] += dz2 * W2[h * H + j];
        }
    }
    for (int h = 0; h < H; ++h) {
        const double dz1 = da1[h] * (1.0 - cache.a1[h] * cache.a1[h]);
        gb1[h] += dz1;
        for (int j = 0; j < in_; ++j) gW1[h * in_ + j] += dz1 * cache.x[j];
    }
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        params[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
    }
}

// ---------------------------------------------------------------------------
// Policy primitives.

namespace {

std::array<double, 4> state_vec(const AgentState& s) {
    return {s.gini, s.c_norm, s.u_norm, s.u_dev};
}

std::array<double, 3> softmax3(const std::vector<double>& logits) {
    const double mx = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> p{};
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        p[a] = std::exp(logits[a] - mx);
        sum += p[a];
    }
    for (int a = 0; a < 3; ++a) p[a] /= sum;
    return p;
}

}  // namespace

std::array<double, 3> policy_probs(const PolicyParams& params, const AgentState& state) {
    const auto sv = state_vec(state);
    const auto logits = params.actor.forward(sv.data());
    for (double l : logits)
        if (!std::isfinite(l)) throw Error("actor produced non-finite logits");
    return softmax3(logits);
}

ActResult act(const PolicyParams& params, const AgentState& state, Rng& rng) {
    const auto sv = state_vec(state);
    for (double v : sv)
        if (!std::isfinite(v)) throw Error("act: non-finite agent state");
    const auto probs = policy_probs(params, state);
    const double u = rng.uniform01();
    int a = 0;
    double cum = 0.0;
    for (; a < 2; ++a) {
        cum += probs[a];
        if (u < cum) break;
    }
    const auto value = params.critic.forward(sv.data());
    return {static_cast<Action>(a), std::log(std::max(probs[a], 1e-300)), value[0]};
}

double apply_action(double w, Action action, double delta, double w_min, double w_max) {
    double next = w;
    if (action == Action::Increase) next = w + delta;
    else if (action == Action::Decrease) next = w - delta;
    return std::clamp(next, w_min, w_max);
}

double action_delta(double delta_base, double median_income, double income) {
    const double ratio = income > 0.0 ? median_income / income : 2.0;
    return delta_base * std::clamp(ratio, 0.5, 2.0);
}

double compute_reward(double u_norm, double access, double c_norm, double theta) {
    return 0.5 * u_norm - 0.3 * std::abs(access - theta) - 0.2 * c_norm;
}

void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         double bootstrap_value, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns) {
    const int n = static_cast<int>(rewards.size());
    if (static_cast<int>(values.size()) != n) throw Error("gae: length mismatch");
    if (n == 0) throw Error("gae: empty series");
    advantages.assign(n, 0.0);
    returns.assign(n, 0.0);
    double next_adv = 0.0;
    for (int t = n - 1; t >= 0; --t) {
        const double next_v = t == n - 1 ? bootstrap_value : values[t + 1];
        const double delta = rewards[t] + gamma * next_v - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        advantages[t] = next_adv;
        returns[t] = advantages[t] + values[t];
    }
}

// ---------------------------------------------------------------------------
// State evaluation.

StateInputs state_inputs(const sched::Schedule& sched, const model::Scenario& sc) {
    const int N = sc.num_households();
    const int T = sc.horizon();
    StateInputs in;
    in.access.resize(N);
    in.cost.assign(N, 0.0);
    in.util.assign(N, 0.0);
    for (int i = 0; i < N; ++i) {
        in.access[i] = sched::renewable_access(sched, sc, i);
        for (int t = 0; t < T; ++t) {
            double thr = 0.0, der = 0.0;
            for (int b = 0; b < sc.num_bess(); ++b) {
                thr += sched.p_charge[b][i][t] + sched.p_discharge[b][i][t];
                der += sched.p_discharge[b][i][t] - sched.p_charge[b][i][t];
            }
            const double d = sched.p_grid[i][t] + sched.solar_power(sc, i, t) + der;
            in.cost[i] += sc.prices[t] * sched.p_grid[i][t] + sc.params.c_bess * thr;
            in.util[i] += sched::utility(sc.households[i], d, sched.p_grid[i][t]);
        }
        in.mean_cost += in.cost[i];
        in.mean_util += in.util[i];
    }
    in.mean_cost /= N;
    in.mean_util /= N;
    in.cost_neutral = in.mean_cost == 0.0;
    in.util_neutral = in.mean_util == 0.0;

    // gini of the access vector; negative access (net charging) is clamped
    // for the inequality measure only
    std::vector<double> clamped(in.access);
    for (double& v : clamped) v = std::max(v, 0.0);
    in.gini = metrics::gini(clamped);
    return in;
}

AgentState compute_state(const StateInputs& in, int i) {
    AgentState s;
    s.gini = in.gini;
    s.c_norm = in.cost_neutral ? 1.0 : in.cost[i] / in.mean_cost;
    s.u_norm = in.util_neutral ? 1.0 : in.util[i] / in.mean_util;
    s.u_dev = in.util[i] - in.mean_util;
    return s;
}

// ---------------------------------------------------------------------------
// PPO update.

LossTerms ppo_loss_and_grad(const PolicyParams& params,
                            const std::vector<AgentExperience>& batch,
                            const std::vector<double>& advantages,
                            const std::vector<double>& returns, const PpoConfig& cfg,
                            std::vector<double>* grad_actor,
                            std::vector<double>* grad_critic) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw Error("ppo update: empty batch");
    LossTerms lt;
    if (grad_actor) grad_actor->assign(params.actor.num_params(), 0.0);
    if (grad_critic) grad_critic->assign(params.critic.num_params(), 0.0);
    const double inv_b = 1.0 / B;

    for (int k = 0; k < B; ++k) {
        const auto sv = state_vec(batch[k].state);
        Mlp::Cache ac, cc;
        const auto logits = params.actor.forward(sv.data(), &ac);
        const auto probs = softmax3(logits);
        const int a = static_cast<int>(batch[k].action);
        const double logp = std::log(std::max(probs[a], 1e-300));
        const double ratio = std::exp(logp - batch[k].log_prob);
        const double adv = advantages[k];

        // clipped surrogate, maximized; gradient flows only through the
        // unclipped branch when it is the active minimum
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
        const double unclipped = ratio * adv;
        const bool take_unclipped = unclipped <= clipped;
        lt.clip += inv_b * std::min(unclipped, clipped);

        double entropy = 0.0;
        for (int j = 0; j < 3; ++j)
            entropy -= probs[j] * std::log(std::max(probs[j], 1e-300));
        lt.entropy += inv_b * entropy;

        // nonnegative KL estimator: mean((r - 1) - log r)
        lt.kl += inv_b * ((ratio - 1.0) - (logp - batch[k].log_prob));

        const auto value = params.critic.forward(sv.data(), &cc);
        const double verr = value[0] - returns[k];
        lt.vf += inv_b * verr * verr;

        if (grad_actor) {
            std::vector<double> dlogits(3, 0.0);
            if (take_unclipped) {
                // d(-ratio*adv)/dlogits = -adv*ratio*(onehot - probs)
                const double s = -inv_b * adv * ratio;
                for (int j = 0; j < 3; ++j)
                    dlogits[j] += s * ((j == a ? 1.0 : 0.0) - probs[j]);
            }
            // entropy bonus, minimized as -c2 * S
            for (int j = 0; j < 3; ++j) {
                const double dS = -probs[j] * (std::log(std::max(probs[j], 1e-300)) + entropy);
                dlogits[j] += -cfg.c2 * inv_b * dS;
            }
            params.actor.backward(ac, dlogits, *grad_actor);
        }
        if (grad_critic) {
            std::vector<double> dv{cfg.c1 * inv_b * 2.0 * verr};
            params.critic.backward(cc, dv, *grad_critic);
        }
    }
    lt.total = -lt.clip + cfg.c1 * lt.vf - cfg.c2 * lt.entropy;
    return lt;
}

UpdateDiagnostics ppo_update(Agent& agent, const std::vector<AgentExperience>& batch,
                             const PpoConfig& cfg) {
    UpdateDiagnostics diag;
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw Error("ppo_update: empty batch");

    std::vector<double> rewards(B), values(B);
    for (int k = 0; k < B; ++k) {
        rewards[k] = batch[k].reward;
        values[k] = batch[k].value_estimate;
    }
    std::vector<double> adv, ret;
    gae(rewards, values, 0.0, cfg.gamma, cfg.gae_lambda, adv, ret);

    // normalize advantages within the batch
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= B;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / B) + 1e-8;
    for (double& a : adv) a = (a - mean) / sd;

    std::vector<double> ga, gc;
    for (int e = 0; e < cfg.epochs; ++e) {
        const LossTerms lt = ppo_loss_and_grad(agent.params, batch, adv, ret, cfg, &ga, &gc);
        if (!std::isfinite(lt.total))
            throw Error("ppo_update: non-finite loss (clip=" + std::to_string(lt.clip) +
                        " vf=" + std::to_string(lt.vf) +
                        " entropy=" + std::to_string(lt.entropy) + ")");
        diag.kl = lt.kl;
        diag.loss = lt.total;
        diag.policy_loss = lt.clip;
        diag.value_loss = lt.vf;
        diag.entropy = lt.entropy;
        if (e > 0 && lt.kl > cfg.target_kl) {
            diag.stopped_early = true;
            break;
        }
        agent.adam_actor.step(agent.params.actor.params(), ga, cfg.learning_rate);
        agent.adam_critic.step(agent.params.critic.params(), gc, cfg.learning_rate);
        diag.epochs_run = e + 1;
    }
    return diag;
}

// ---------------------------------------------------------------------------
// The equity loop (Algorithm phases 1-3, iterated).

namespace {

void validate_config(const PpoConfig& cfg) {
    if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0))
        throw Error("ppo config: clip_eps must be in (0, 1)");
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
        throw Error("ppo config: gamma must be in (0, 1]");
    if (!(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0))
        throw Error("ppo config: gae_lambda must be in [0, 1]");
    if (!(cfg.c1 > 0.0 && cfg.c2 >= 0.0 && cfg.epochs > 0 && cfg.learning_rate > 0.0 &&
          cfg.target_kl > 0.0 && cfg.max_iterations > 0 && cfg.weight_tolerance > 0.0 &&
          cfg.delta_base > 0.0 && cfg.hidden > 0))
        throw Error("ppo config: coefficients, rates, and sizes must be positive");
}

}  // namespace

EquityLoopResult run_equity_loop(const model::Scenario& sc, const PpoConfig& cfg,
                                 std::uint64_t seed,
                                 const lp::SolverOptions& solver_options) {
    validate_config(cfg);
    const int N = sc.num_households();
    EquityLoopResult result;
    model::EquityWeights w(N, 1.0);

    std::vector<double> incomes;
    incomes.reserve(N);
    for (const auto& hh : sc.households) incomes.push_back(hh.income);
    std::vector<double> sorted_inc(incomes);
    std::sort(sorted_inc.begin(), sorted_inc.end());
    const double median_income = N % 2 == 1
        ? sorted_inc[N / 2]
        : 0.5 * (sorted_inc[N / 2 - 1] + sorted_inc[N / 2]);

    std::vector<Agent> agents;
    agents.reserve(N);
    for (int i = 0; i < N; ++i)
        agents.emplace_back(cfg.hidden, seed, static_cast<std::uint64_t>(i));

    // Outside options and the minimal feasible relaxation rung are invariant
    // across iterations (the weights only enter the objective), so both are
    // established once and reused.
    const std::vector<double> s_out = sched::outside_options(sc);
    sched::RelaxRung rung = sched::RelaxRung::None;

    int consecutive_small = 0;
    for (int k = 1; k <= cfg.max_iterations; ++k) {
        auto problem = sched::build_problem(sc, w, rung, &s_out);
        sched::Schedule schedule = sched::solve(problem, solver_options);
        if (schedule.status == sched::ScheduleStatus::Infeasible)
            throw Error("equity loop: dispatch infeasible after the recovery ladder");
        rung = schedule.relax_rung;

        const StateInputs inputs = state_inputs(schedule, sc);

        IterationRecord rec;
        rec.iteration = k;
        rec.gini = inputs.gini;
        rec.objective = schedule.objective;
        rec.relax_rung = static_cast<int>(schedule.relax_rung);
        rec.rewards.assign(N, 0.0);
        rec.kl.assign(N, 0.0);

        std::vector<double> new_w(w);
        std::vector<char> early(N, 0);
        parallel_for(static_cast<std::size_t>(N), [&](std::size_t i) {
            Agent& agent = agents[i];
            const AgentState st = compute_state(inputs, static_cast<int>(i));
            const double reward = compute_reward(st.u_norm, inputs.access[i], st.c_norm,
                                                 sc.params.theta);
            const ActResult ar = act(agent.params, st, agent.rng);
            agent.trajectory.push_back({st, ar.action, reward, ar.value, ar.log_prob});
            const UpdateDiagnostics diag = ppo_update(agent, agent.trajectory, cfg);
            const double delta =
                action_delta(cfg.delta_base, median_income, incomes[i]);
            new_w[i] = apply_action(w[i], ar.action, delta, sc.params.w_min,
                                    sc.params.w_max);
            rec.rewards[i] = reward;
            rec.kl[i] = diag.kl;
            early[i] = diag.stopped_early ? 1 : 0;
        });
        for (int i = 0; i < N; ++i) rec.any_early_stop |= early[i] != 0;

        double max_dw = 0.0;
        for (int i = 0; i < N; ++i) max_dw = std::max(max_dw, std::abs(new_w[i] - w[i]));
        w = std::move(new_w);
        rec.weights = w;
        result.history.push_back(std::move(rec));

        consecutive_small = max_dw < cfg.weight_tolerance ? consecutive_small + 1 : 0;
        if (consecutive_small >= 3) {
            result.converged = true;
            break;
        }
    }

    // the allocation phase consumes a schedule consistent with the final
    // converged weights
    auto final_problem = sched::build_problem(sc, w, rung, &s_out);
    result.final_schedule = sched::solve(final_problem, solver_options);
    if (result.final_schedule.status == sched::ScheduleStatus::Infeasible)
        throw Error("equity loop: final dispatch infeasible");
    result.final_weights = std::move(w);
    return result;
}

}  // namespace eqgrid::rl
