#pragma once

#include <random>
#include <string>
#include <vector>

#include "pitchvi/events.hpp"
#include "pitchvi/model.hpp"
#include "pitchvi/vi.hpp"

namespace pitchvi::test {

inline RawTouchEvent ev(long long team, long long player, const char* type,
                        Outcome outcome = Outcome::Successful, int minute = 0, int second = 0,
                        Period period = Period::FirstHalf) {
    RawTouchEvent e;
    e.minute = minute;
    e.second = second;
    e.period = period;
    e.team_id = team;
    e.player_id = player;
    e.type = parse_event_type(type);
    e.outcome = outcome;
    return e;
}

inline CountRow count_row(long long fixture, long long player, long long team, bool home,
                          double tau, std::vector<long long> counts) {
    CountRow r;
    r.fixture_id = fixture;
    r.player_id = player;
    r.team_id = team;
    r.home = home;
    r.tau = tau;
    r.counts = std::move(counts);
    return r;
}

// A small random instance for property tests: two teams, a few players per
// side, a few fixtures with random tau and counts.
struct RandomInstance {
    FixtureCountTable counts;
    ModelData data;
    VariationalState state;
};

inline RandomInstance random_instance(std::uint64_t seed, int max_players_per_side = 6,
                                      int max_fixtures = 10) {
    std::mt19937_64 rng(seed);
    auto rint = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    auto runif = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };

    RandomInstance inst;
    inst.counts.columns = {"Goal", "GoalStop"};
    int per_side = rint(2, max_players_per_side);
    int n_fixtures = rint(1, max_fixtures);
    for (int k = 0; k < n_fixtures; ++k) {
        bool home_first = rint(0, 1) == 0;
        for (int s = 0; s < 2; ++s) {
            long long team = 10 + s;
            for (int p = 0; p < per_side; ++p) {
                long long player = team * 100 + p;
                double tau = rint(0, 5) == 0 ? 1.0 : runif(0.1, 1.0);
                inst.counts.rows.push_back(count_row(
                    500 + k, player, team, (s == 0) == home_first, tau,
                    {rint(0, 3), rint(0, 3)}));
            }
        }
    }
    inst.data = ModelData::build(inst.counts, {"Goal", "GoalStop"});

    inst.state.events = inst.data.events;
    inst.state.player_ids = inst.data.player_ids;
    for (int p = 0; p < inst.data.players(); ++p) {
        for (int e = 0; e < 2; ++e) {
            inst.state.mu.push_back(runif(-2.5, 0.5));
            inst.state.sigma.push_back(runif(0.05, 1.2));
        }
    }
    for (int e = 0; e < 2; ++e) {
        inst.state.psi.ev[e].lambda1 = runif(0.001, 0.2);
        inst.state.psi.ev[e].lambda2 = runif(0.001, 0.2);
        inst.state.psi.ev[e].gamma = runif(-0.3, 0.3);
    }
    return inst;
}

// Monte Carlo ELBO estimate: mean of log p(x, delta) - log q(delta) over
// draws from q, with its standard error.
inline std::pair<double, double> mc_elbo(const ModelData& data, const VariationalState& state,
                                         const PriorSpec& prior, int n_draws,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> delta(state.mu.size());
    double sum = 0.0, sumsq = 0.0;
    for (int d = 0; d < n_draws; ++d) {
        double log_q = 0.0;
        for (size_t i = 0; i < delta.size(); ++i) {
            double z = normal(rng);
            delta[i] = state.mu[i] + state.sigma[i] * z;
            log_q += -0.5 * std::log(2.0 * M_PI * state.sigma[i] * state.sigma[i]) -
                     0.5 * z * z;
        }
        double v = log_likelihood(data, delta, state.psi) + log_prior(delta, prior) - log_q;
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n_draws;
    double var = (sumsq - n_draws * mean * mean) / (n_draws - 1);
    return {mean, std::sqrt(var / n_draws)};
}

}  // namespace pitchvi::test
