#include "pitchvi/vi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace pitchvi {

namespace {

// Per-fixture, per-(side,event) sums of mu and sigma^2 over the side's rows.
struct SideSums {
    double mu[2][2] = {{0, 0}, {0, 0}};
    double sig2[2][2] = {{0, 0}, {0, 0}};
};

SideSums side_sums(const ModelFixture& fx, const VariationalState& state) {
    SideSums sums;
    for (int s = 0; s < 2; ++s) {
        for (const auto& r : fx.side[s]) {
            for (int e = 0; e < 2; ++e) {
                double sg = state.sigma[r.player * 2 + e];
                sums.mu[s][e] += state.mu[r.player * 2 + e];
                sums.sig2[s][e] += sg * sg;
            }
        }
    }
    return sums;
}

// star - dagger - log(x!) for one row/event; the closed-form expectation of
// the Poisson log-likelihood under q.
double row_term(const ModelFixture& fx, const SideSums& sums, int s, const ModelRow& row, int e,
                const VariationalState& state) {
    const EventParams& p = state.psi.ev[e];
    const int other = 1 - e;
    const bool home = fx.home_side == s;
    const double a = row.tau * p.lambda1;
    const double b = row.tau * p.lambda2;
    const double mu_i = state.mu[row.player * 2 + e];
    const double sg_i = state.sigma[row.player * 2 + e];

    const double lin = mu_i + row.tau * (p.lambda1 * sums.mu[s][e] - p.lambda2 * sums.mu[1 - s][other]) +
                       (home ? p.gamma : 0.0) + row.log_tau;
    const double star = row.x[e] * lin;
    const double log_dagger = (1.0 + a) * mu_i + 0.5 * (1.0 + a) * (1.0 + a) * sg_i * sg_i +
                              a * (sums.mu[s][e] - mu_i) +
                              0.5 * a * a * (sums.sig2[s][e] - sg_i * sg_i) -
                              b * sums.mu[1 - s][other] + 0.5 * b * b * sums.sig2[1 - s][other] +
                              (home ? p.gamma : 0.0) + row.log_tau;
    return star - std::exp(log_dagger) - std::lgamma(row.x[e] + 1.0);
}

}  // namespace

int VariationalState::index_of(long long player_id) const {
    for (size_t i = 0; i < player_ids.size(); ++i)
        if (player_ids[i] == player_id) return static_cast<int>(i);
    return -1;
}

void VariationalState::validate() const {
    if (mu.size() != sigma.size() || mu.size() != player_ids.size() * 2)
        throw DomainError("variational state has inconsistent sizes");
    for (double s : sigma)
        if (!(s > 0.0)) throw DomainError("variational sigma must be positive");
    psi.validate();
}

double entropy_term(double /*mu*/, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("entropy_term requires sigma > 0");
    return -0.5 * std::log(2.0 * M_PI * sigma * sigma) - 0.5;
}

double prior_term(double mu, double sigma, const PriorSpec& prior) {
    if (sigma < 0.0) throw DomainError("prior_term requires sigma >= 0");
    if (!(prior.s > 0.0)) throw DomainError("prior sd must be positive");
    const double s2 = prior.s * prior.s;
    return -0.5 * std::log(2.0 * M_PI * s2) -
           (sigma * sigma + mu * mu - 2.0 * prior.m * mu + prior.m * prior.m) / (2.0 * s2);
}

double likelihood_term(const ModelData& data, int player, int e, const VariationalState& state) {
    double total = 0.0;
    for (const auto& fx : data.fixtures) {
        SideSums sums = side_sums(fx, state);
        for (int s = 0; s < 2; ++s)
            for (const auto& row : fx.side[s])
                if (row.player == player) total += row_term(fx, sums, s, row, e, state);
    }
    return total;
}

double elbo(const ModelData& data, const VariationalState& state, const PriorSpec& prior) {
    state.validate();
    double total = 0.0;
    for (size_t i = 0; i < state.mu.size(); ++i)
        total += prior_term(state.mu[i], state.sigma[i], prior) -
                 entropy_term(state.mu[i], state.sigma[i]);
    for (const auto& fx : data.fixtures) {
        SideSums sums = side_sums(fx, state);
        for (int s = 0; s < 2; ++s)
            for (const auto& row : fx.side[s])
                for (int e = 0; e < 2; ++e) total += row_term(fx, sums, s, row, e, state);
    }
    return total;
}

ElboGradient grad_elbo(const ModelData& data, const VariationalState& state,
                       const PriorSpec& prior) {
    state.validate();
    const size_t n = state.mu.size();
    ElboGradient g;
    g.mu.assign(n, 0.0);
    g.log_sigma.assign(n, 0.0);
    std::vector<double> gsig(n, 0.0);  // raw d/dsigma, reparameterized at the end
    std::array<double, 2> gl1{0.0, 0.0}, gl2{0.0, 0.0};

    for (const auto& fx : data.fixtures) {
        SideSums sums = side_sums(fx, state);
        // Coefficients applied uniformly to every member of (side, event).
        double cmu[2][2] = {{0, 0}, {0, 0}};
        double csig[2][2] = {{0, 0}, {0, 0}};
        for (int s = 0; s < 2; ++s) {
            for (const auto& row : fx.side[s]) {
                for (int e = 0; e < 2; ++e) {
                    const EventParams& p = state.psi.ev[e];
                    const int other = 1 - e;
                    const bool home = fx.home_side == s;
                    const double a = row.tau * p.lambda1;
                    const double b = row.tau * p.lambda2;
                    const double x = row.x[e];
                    const double mu_i = state.mu[row.player * 2 + e];
                    const double sg_i = state.sigma[row.player * 2 + e];

                    const double lin =
                        mu_i + row.tau * (p.lambda1 * sums.mu[s][e] -
                                          p.lambda2 * sums.mu[1 - s][other]) +
                        (home ? p.gamma : 0.0) + row.log_tau;
                    const double log_dagger =
                        (1.0 + a) * mu_i + 0.5 * (1.0 + a) * (1.0 + a) * sg_i * sg_i +
                        a * (sums.mu[s][e] - mu_i) +
                        0.5 * a * a * (sums.sig2[s][e] - sg_i * sg_i) -
                        b * sums.mu[1 - s][other] + 0.5 * b * b * sums.sig2[1 - s][other] +
                        (home ? p.gamma : 0.0) + row.log_tau;
                    const double D = std::exp(log_dagger);
                    g.value += x * lin - D - std::lgamma(x + 1.0);

                    const double xd = x - D;
                    cmu[s][e] += xd * a;
                    g.mu[row.player * 2 + e] += xd;
                    cmu[1 - s][other] -= xd * b;
                    csig[s][e] -= D * a * a;
                    gsig[row.player * 2 + e] -= D * (1.0 + 2.0 * a) * sg_i;
                    csig[1 - s][other] -= D * b * b;
                    if (home) g.gamma[e] += xd;
                    gl1[e] += x * row.tau * sums.mu[s][e] -
                              D * (row.tau * sums.mu[s][e] + row.tau * (1.0 + a) * sg_i * sg_i +
                                   a * row.tau * (sums.sig2[s][e] - sg_i * sg_i));
                    gl2[e] += -x * row.tau * sums.mu[1 - s][other] +
                              D * (row.tau * sums.mu[1 - s][other] -
                                   b * row.tau * sums.sig2[1 - s][other]);
                }
            }
        }
        for (int s = 0; s < 2; ++s) {
            for (const auto& row : fx.side[s]) {
                for (int e = 0; e < 2; ++e) {
                    g.mu[row.player * 2 + e] += cmu[s][e];
                    gsig[row.player * 2 + e] += csig[s][e] * state.sigma[row.player * 2 + e];
                }
            }
        }
    }

    const double s2 = prior.s * prior.s;
    for (size_t i = 0; i < n; ++i) {
        g.value += prior_term(state.mu[i], state.sigma[i], prior) -
                   entropy_term(state.mu[i], state.sigma[i]);
        g.mu[i] += -(state.mu[i] - prior.m) / s2;
        gsig[i] += -state.sigma[i] / s2 + 1.0 / state.sigma[i];
        g.log_sigma[i] = gsig[i] * state.sigma[i];
    }
    for (int e = 0; e < 2; ++e) {
        g.log_lambda1[e] = gl1[e] * state.psi.ev[e].lambda1;
        g.log_lambda2[e] = gl2[e] * state.psi.ev[e].lambda2;
    }
    return g;
}

VariationalState initial_state(const ModelData& data, const PriorSpec& prior,
                               const OptimizerConfig& config) {
    VariationalState state;
    state.events = data.events;
    state.player_ids = data.player_ids;
    state.mu.assign(data.players() * 2, prior.m);
    state.sigma.assign(data.players() * 2, prior.s);
    if (config.init_psi) state.psi = *config.init_psi;
    return state;
}

std::pair<VariationalState, ElboTrace> fit(const ModelData& data, const PriorSpec& prior,
                                           const OptimizerConfig& config) {
    if (config.max_iters < 0) throw DomainError("max_iters must be >= 0");
    VariationalState state = initial_state(data, prior, config);
    ElboTrace trace;
    if (config.max_iters == 0) return {state, trace};

    const size_t n = state.mu.size();
    std::vector<double> log_sigma(n), m1(2 * n + 6, 0.0), m2(2 * n + 6, 0.0);
    for (size_t i = 0; i < n; ++i) log_sigma[i] = std::log(state.sigma[i]);
    std::array<double, 2> log_l1, log_l2;
    for (int e = 0; e < 2; ++e) {
        log_l1[e] = std::log(state.psi.ev[e].lambda1);
        log_l2[e] = std::log(state.psi.ev[e].lambda2);
    }

    auto adam_step = [&](size_t slot, double grad, int iter) {
        m1[slot] = config.beta1 * m1[slot] + (1.0 - config.beta1) * grad;
        m2[slot] = config.beta2 * m2[slot] + (1.0 - config.beta2) * grad * grad;
        double mhat = m1[slot] / (1.0 - std::pow(config.beta1, iter + 1));
        double vhat = m2[slot] / (1.0 - std::pow(config.beta2, iter + 1));
        double step = config.step / (1.0 + config.step_decay * iter);
        return step * mhat / (std::sqrt(vhat) + config.adam_eps);
    };

    for (int iter = 0; iter < config.max_iters; ++iter) {
        ElboGradient g = grad_elbo(data, state, prior);
        if (!std::isfinite(g.value)) {
            throw OptimError("non-finite ELBO at iteration " + std::to_string(iter), iter);
        }
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(g.mu[i]) || !std::isfinite(g.log_sigma[i]))
                throw OptimError("non-finite gradient for player " +
                                     std::to_string(state.player_ids[i / 2]) + " event slot " +
                                     std::to_string(i % 2) + " at iteration " +
                                     std::to_string(iter),
                                 iter);
        }

        TracePoint pt;
        pt.iter = iter;
        pt.elbo = g.value;
        if (iter % 100 == 0) pt.psi = state.psi;
        trace.points.push_back(pt);

        // Convergence is reported, not acted on, unless early_stop is set.
        if (trace.converged_at < 0 && iter >= config.convergence_window) {
            double prev = trace.points[iter - config.convergence_window].elbo;
            double rel = std::abs(g.value - prev) / std::max(1.0, std::abs(prev));
            if (rel < config.convergence_tol) trace.converged_at = iter;
        }
        if (config.early_stop && trace.converged_at >= 0) break;

        for (size_t i = 0; i < n; ++i) {
            state.mu[i] += adam_step(i, g.mu[i], iter);
            log_sigma[i] += adam_step(n + i, g.log_sigma[i], iter);
            state.sigma[i] = std::exp(log_sigma[i]);
        }
        if (!config.psi_frozen) {
            for (int e = 0; e < 2; ++e) {
                log_l1[e] += adam_step(2 * n + e, g.log_lambda1[e], iter);
                log_l2[e] += adam_step(2 * n + 2 + e, g.log_lambda2[e], iter);
                state.psi.ev[e].gamma += adam_step(2 * n + 4 + e, g.gamma[e], iter);
                state.psi.ev[e].lambda1 = std::exp(log_l1[e]);
                state.psi.ev[e].lambda2 = std::exp(log_l2[e]);
            }
        }
    }
    return {state, trace};
}

std::pair<double, double> eta_prediction_interval(const ModelData& data, int fixture, int side,
                                                  int member, int e,
                                                  const VariationalState& state, double level,
                                                  int n_draws, std::uint64_t seed) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("interval level must be in (0,1)");
    if (n_draws < 1) throw DomainError("n_draws must be >= 1");
    const ModelFixture& fx = data.fixtures[fixture];
    const ModelRow& target = fx.side[side][member];
    const EventParams& p = state.psi.ev[e];
    const int other = 1 - e;
    const bool home = fx.home_side == side;
    auto state_index = [&](int player) {
        int i = state.index_of(data.player_ids[player]);
        if (i < 0)
            throw ReferentialError("player " + std::to_string(data.player_ids[player]) +
                                   " missing from the fitted state");
        return i;
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> draws(n_draws);
    for (int d = 0; d < n_draws; ++d) {
        double own = 0.0, opp = 0.0, self = 0.0;
        for (const auto& r : fx.side[side]) {
            double z = normal(rng);
            int i = state_index(r.player);
            double delta = state.mu[i * 2 + e] + state.sigma[i * 2 + e] * z;
            own += delta;
            if (r.player == target.player) self = delta;
        }
        for (const auto& r : fx.side[1 - side]) {
            double z = normal(rng);
            int i = state_index(r.player);
            opp += state.mu[i * 2 + other] + state.sigma[i * 2 + other] * z;
        }
        double log_eta = self + target.tau * (p.lambda1 * own - p.lambda2 * opp) +
                         (home ? p.gamma : 0.0);
        draws[d] = std::exp(log_eta);
    }
    std::sort(draws.begin(), draws.end());
    auto quantile = [&](double q) {
        double pos = q * (n_draws - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, draws.size() - 1);
        double frac = pos - lo;
        return draws[lo] * (1.0 - frac) + draws[hi] * frac;
    };
    double alpha = 1.0 - level;
    return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

void save_posterior_json(const VariationalState& state, const ElboTrace& trace,
                         const std::string& path) {
    nlohmann::ordered_json j;
    for (int e = 0; e < 2; ++e) {
        auto& ev = j["events"][state.events[e]];
        for (int p = 0; p < state.players(); ++p) {
            auto& entry = ev[std::to_string(state.player_ids[p])];
            entry["mu"] = state.mu[p * 2 + e];
            entry["sigma"] = state.sigma[p * 2 + e];
        }
        auto& psi = j["psi"][state.events[e]];
        psi["lambda1"] = state.psi.ev[e].lambda1;
        psi["lambda2"] = state.psi.ev[e].lambda2;
        psi["gamma"] = state.psi.ev[e].gamma;
    }
    j["trace"] = nlohmann::json::array();
    for (const auto& pt : trace.points)
        j["trace"].push_back({{"iter", pt.iter}, {"elbo", pt.elbo}});
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << j.dump(2) << '\n';
}

std::pair<VariationalState, ElboTrace> load_posterior_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
    VariationalState state;
    int e = 0;
    for (const auto& [event, _] : j.at("psi").items()) {
        if (e >= 2) throw ParseError(path + ": more than two event blocks", 0);
        state.events[e++] = event;
    }
    for (e = 0; e < 2; ++e) {
        const auto& psi = j.at("psi").at(state.events[e]);
        state.psi.ev[e].lambda1 = psi.at("lambda1");
        state.psi.ev[e].lambda2 = psi.at("lambda2");
        state.psi.ev[e].gamma = psi.at("gamma");
    }
    const auto& ev0 = j.at("events").at(state.events[0]);
    for (const auto& [player, _] : ev0.items())
        state.player_ids.push_back(std::stoll(player));
    std::sort(state.player_ids.begin(), state.player_ids.end());
    state.mu.assign(state.player_ids.size() * 2, 0.0);
    state.sigma.assign(state.player_ids.size() * 2, 1.0);
    for (e = 0; e < 2; ++e) {
        const auto& ev = j.at("events").at(state.events[e]);
        for (size_t p = 0; p < state.player_ids.size(); ++p) {
            const auto& entry = ev.at(std::to_string(state.player_ids[p]));
            state.mu[p * 2 + e] = entry.at("mu");
            state.sigma[p * 2 + e] = entry.at("sigma");
        }
    }
    ElboTrace trace;
    if (j.contains("trace"))
        for (const auto& pt : j["trace"])
            trace.points.push_back({pt.at("iter"), pt.at("elbo"), std::nullopt});
    return {state, trace};
}

}  // namespace pitchvi
