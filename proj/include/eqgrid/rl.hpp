// Per-household PPO agents adjusting the socio-economic weights: dense
// actor/critic networks with explicit parameter vectors, GAE, the clipped
// surrogate update with KL early stopping, and the iterate-until-converged
// wrapper around the dispatch solver.
#ifndef EQGRID_RL_HPP
#define EQGRID_RL_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "eqgrid/model.hpp"
#include "eqgrid/rng.hpp"
#include "eqgrid/sched.hpp"

namespace eqgrid::rl {

struct AgentState {
    double gini = 0.0;    // system-wide access inequality
    double c_norm = 1.0;  // cost relative to the community mean
    double u_norm = 1.0;  // utility relative to the community mean
    double u_dev = 0.0;   // utility deviation from the mean
};

enum class Action : int { Increase = 0, NoChange = 1, Decrease = 2 };

struct AgentExperience {
    AgentState state;
    Action action = Action::NoChange;
    double reward = 0.0;
    double value_estimate = 0.0;
    double log_prob = 0.0;
};

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_eps = 0.2;
    double c1 = 0.5;   // value loss coefficient
    double c2 = 0.01;  // entropy coefficient
    int epochs = 4;
    double learning_rate = 3e-4;
    double target_kl = 0.015;
    int max_iterations = 30;        // K
    double weight_tolerance = 0.01; // convergence threshold on |dw|
    double delta_base = 0.05;       // base action magnitude
    int hidden = 64;
};

// Dense network with two tanh hidden layers and a linear head; parameters
// live in one flat vector so they can be enumerated and finite-differenced.
class Mlp {
public:
    Mlp(int in, int hidden, int out);

    // Hidden layers draw from uniform(-1/sqrt(fan_in), ..); the head is
    // scaled by `head_scale` (zero gives a uniform initial policy).
    void init(Rng& rng, double head_scale);

    struct Cache {
        std::vector<double> x, a1, a2;  // input and post-tanh activations
    };

    std::vector<double> forward(const double* x, Cache* cache = nullptr) const;
    // Accumulates dL/dparams into grad given dL/doutput.
    void backward(const Cache& cache, const std::vector<double>& dout,
                  std::vector<double>& grad) const;

    int num_params() const { return static_cast<int>(w_.size()); }
    std::vector<double>& params() { return w_; }
    const std::vector<double>& params() const { return w_; }
    int out_dim() const { return out_; }

private:
    int in_, hidden_, out_;
    std::vector<double> w_;
};

struct Adam {
    std::vector<double> m, v;
    int t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
};

struct PolicyParams {
    Mlp actor;   // 4 -> hidden -> hidden -> 3 action logits
    Mlp critic;  // 4 -> hidden -> hidden -> 1 value

    explicit PolicyParams(int hidden = 64) : actor(4, hidden, 3), critic(4, hidden, 1) {}
    void init(Rng& rng) {
        actor.init(rng, 0.0);  // all-zero head: exactly uniform initial policy
        critic.init(rng, 0.0);
    }
};

struct Agent {
    PolicyParams params;
    Adam adam_actor, adam_critic;
    std::vector<AgentExperience> trajectory;
    Rng rng;

    Agent(int hidden, std::uint64_t seed, std::uint64_t id)
        : params(hidden), rng(seed, id, "agent-act") {
        Rng init_rng(seed, id, "agent-init");
        params.init(init_rng);
    }
};

std::array<double, 3> policy_probs(const PolicyParams& params, const AgentState& state);

struct ActResult {
    Action action;
    double log_prob;
    double value;
};

ActResult act(const PolicyParams& params, const AgentState& state, Rng& rng);

double apply_action(double w, Action action, double delta, double w_min, double w_max);

// Income-scaled action magnitude: larger steps for lower incomes.
double action_delta(double delta_base, double median_income, double income);

// Weighted utility / equity-deviation / cost reward.
double compute_reward(double u_norm, double access, double c_norm, double theta);

void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         double bootstrap_value, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns);

// Shared per-iteration quantities feeding every agent's state.
struct StateInputs {
    std::vector<double> access;
    double gini = 0.0;
    std::vector<double> cost;     // total daily payments
    std::vector<double> util;     // total daily household utility
    double mean_cost = 0.0, mean_util = 0.0;
    bool cost_neutral = false, util_neutral = false;  // flagged zero means
};

StateInputs state_inputs(const sched::Schedule& schedule, const model::Scenario& scenario);
AgentState compute_state(const StateInputs& in, int i);

struct LossTerms {
    double total = 0.0;
    double clip = 0.0;     // surrogate objective (maximized)
    double vf = 0.0;       // value MSE
    double entropy = 0.0;  // mean policy entropy
    double kl = 0.0;       // nonnegative estimator of KL(old || new)
};

// Combined PPO loss (minimized) and its exact gradient over a batch;
// advantages enter normalized, returns are GAE returns.
LossTerms ppo_loss_and_grad(const PolicyParams& params,
                            const std::vector<AgentExperience>& batch,
                            const std::vector<double>& advantages,
                            const std::vector<double>& returns, const PpoConfig& cfg,
                            std::vector<double>* grad_actor,
                            std::vector<double>* grad_critic);

struct UpdateDiagnostics {
    double kl = 0.0;
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    int epochs_run = 0;
    bool stopped_early = false;
};

UpdateDiagnostics ppo_update(Agent& agent, const std::vector<AgentExperience>& batch,
                             const PpoConfig& cfg);

struct IterationRecord {
    int iteration = 0;
    std::vector<double> weights;  // after the update
    double gini = 0.0;
    double objective = 0.0;
    int relax_rung = 0;
    std::vector<double> rewards;
    std::vector<double> kl;
    bool any_early_stop = false;
};

struct EquityLoopResult {
    sched::Schedule final_schedule;
    model::EquityWeights final_weights;
    std::vector<IterationRecord> history;
    bool converged = false;
};

// Algorithm phases 1-3 iterated to convergence: solve, evaluate, act,
// update, adjust weights; aborts when dispatch stays infeasible after the
// full recovery ladder.
EquityLoopResult run_equity_loop(const model::Scenario& scenario, const PpoConfig& cfg,
                                 std::uint64_t seed,
                                 const lp::SolverOptions& solver_options = {});

}  // namespace eqgrid::rl

#endif
