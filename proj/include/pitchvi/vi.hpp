#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pitchvi/model.hpp"

namespace pitchvi {

// Mean-field Gaussian factors q(D_i^e) = N(mu, sigma^2) plus the fixed
// per-event parameters psi. mu/sigma laid out as player*2 + e, player order
// shared with ModelData::player_ids.
struct VariationalState {
    std::array<std::string, 2> events;
    std::vector<long long> player_ids;
    std::vector<double> mu;
    std::vector<double> sigma;
    FixedParams psi;

    int players() const { return static_cast<int>(player_ids.size()); }
    int index_of(long long player_id) const;  // -1 when absent

    // Free parameter count: 2 (mu, sigma) per player per event plus 6 psi.
    int free_parameters() const { return 2 * static_cast<int>(mu.size()) + 6; }

    void validate() const;
};

struct TracePoint {
    int iter = 0;
    double elbo = 0.0;
    std::optional<FixedParams> psi;  // snapshot every 100 iterations
};

struct ElboTrace {
    std::vector<TracePoint> points;
    int converged_at = -1;  // first iteration meeting the convergence window, -1 if never
};

struct OptimizerConfig {
    int max_iters = 7000;
    double step = 0.01;
    double step_decay = 0.0;  // step_t = step / (1 + step_decay * t)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    bool psi_frozen = false;
    std::optional<FixedParams> init_psi;
    int convergence_window = 500;
    double convergence_tol = 1e-6;
    bool early_stop = false;
};

// E_q[log q] for one factor: -log(2 pi sigma^2)/2 - 1/2. mu kept for
// interface uniformity.
double entropy_term(double mu, double sigma);

// E_q[log prior] for one factor.
double prior_term(double mu, double sigma, const PriorSpec& prior);

// E_q[log-likelihood] contribution of (player, e) over the player's fixtures.
double likelihood_term(const ModelData& data, int player, int e, const VariationalState& state);

// Closed-form ELBO: sum over factors of prior_term - entropy_term, plus the
// likelihood expectation over all rows.
double elbo(const ModelData& data, const VariationalState& state, const PriorSpec& prior);

// Gradient in the unconstrained parameterization (mu, log sigma, log lambda,
// gamma). `value` is the ELBO at the evaluation point.
struct ElboGradient {
    std::vector<double> mu;
    std::vector<double> log_sigma;
    std::array<double, 2> log_lambda1{0.0, 0.0};
    std::array<double, 2> log_lambda2{0.0, 0.0};
    std::array<double, 2> gamma{0.0, 0.0};
    double value = 0.0;
};

ElboGradient grad_elbo(const ModelData& data, const VariationalState& state,
                       const PriorSpec& prior);

VariationalState initial_state(const ModelData& data, const PriorSpec& prior,
                               const OptimizerConfig& config);

// Full-batch Adam ascent on the closed-form ELBO.
std::pair<VariationalState, ElboTrace> fit(const ModelData& data, const PriorSpec& prior,
                                           const OptimizerConfig& config);

// Empirical (alpha/2, 1-alpha/2) quantiles of eta for one row under q.
std::pair<double, double> eta_prediction_interval(const ModelData& data, int fixture, int side,
                                                  int member, int e,
                                                  const VariationalState& state,
                                                  double level = 0.95, int n_draws = 10000,
                                                  std::uint64_t seed = 0);

void save_posterior_json(const VariationalState& state, const ElboTrace& trace,
                         const std::string& path);
std::pair<VariationalState, ElboTrace> load_posterior_json(const std::string& path);

}  // namespace pitchvi
