#include "pitchvi/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pitchvi/csv.hpp"

namespace pitchvi {

double normal_inverse_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must be in (0,1)");
    // Wichura's AS241 (PPND16).
    const double q = p - 0.5;
    double r, x;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        x = q *
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
               1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
               4.2313330701600911252e1) * r + 1.0);
    } else {
        r = q < 0.0 ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        if (r <= 5.0) {
            r -= 1.6;
            x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                   4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                   2.05319162663775882187e0) * r + 1.0);
        } else {
            r -= 5.0;
            x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                   5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                   5.99832206555887937690e-1) * r + 1.0);
        }
        if (q < 0.0) x = -x;
    }
    // One Newton refinement against erfc.
    double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf > 0.0) x -= (cdf - p) / pdf;
    return x;
}

double gaussian_quantile(double mu, double sigma, double p) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    return mu + sigma * normal_inverse_cdf(p);
}

PlayerRanking rank_players(const VariationalState& state, const std::string& event,
                           const FixtureCountTable& counts, int top_n) {
    int e = -1;
    for (int i = 0; i < 2; ++i)
        if (state.events[i] == event) e = i;
    if (e < 0) throw ReferentialError("event type '" + event + "' not in fitted state");

    std::map<long long, long long> season_total;
    std::map<long long, double> minutes;
    int col = counts.column_index(event);
    for (const auto& row : counts.rows) {
        if (col >= 0) season_total[row.player_id] += row.counts[col];
        minutes[row.player_id] += row.tau * 90.0;
    }

    // Observed ranks: total descending, ties to the smaller player id.
    std::vector<long long> by_observed;
    for (int p = 0; p < state.players(); ++p) by_observed.push_back(state.player_ids[p]);
    std::sort(by_observed.begin(), by_observed.end(), [&](long long a, long long b) {
        long long ta = season_total[a], tb = season_total[b];
        if (ta != tb) return ta > tb;
        return a < b;
    });
    std::map<long long, int> observed_rank;
    for (size_t i = 0; i < by_observed.size(); ++i)
        observed_rank[by_observed[i]] = static_cast<int>(i) + 1;

    std::vector<RankedPlayer> rows;
    for (int p = 0; p < state.players(); ++p) {
        RankedPlayer r;
        r.player_id = state.player_ids[p];
        r.mean = state.mu[p * 2 + e];
        r.sd = state.sigma[p * 2 + e];
        r.quantile_2_5 = gaussian_quantile(r.mean, r.sd, 0.025);
        r.observed_count = season_total[r.player_id];
        r.observed_rank = observed_rank[r.player_id];
        r.minutes_played = minutes[r.player_id];
        rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end(), [](const RankedPlayer& a, const RankedPlayer& b) {
        if (a.quantile_2_5 != b.quantile_2_5) return a.quantile_2_5 > b.quantile_2_5;
        return a.player_id < b.player_id;
    });
    PlayerRanking out;
    for (size_t i = 0; i < rows.size() && static_cast<int>(i) < top_n; ++i) {
        rows[i].rank = static_cast<int>(i) + 1;
        rows[i].rank_difference = rows[i].observed_rank - rows[i].rank;
        out.rows.push_back(rows[i]);
    }
    return out;
}

void simulate_predictive(const ModelData& data, const VariationalState& state, int n_draws,
                         std::uint64_t seed, const SimSink& sink) {
    if (n_draws < 1) throw DomainError("n_draws must be >= 1");
    state.validate();
    // Data and state may order players differently (e.g. a reloaded posterior).
    std::vector<int> rm(data.players());
    for (int p = 0; p < data.players(); ++p) {
        rm[p] = state.index_of(data.player_ids[p]);
        if (rm[p] < 0)
            throw ReferentialError("player " + std::to_string(data.player_ids[p]) +
                                   " missing from the fitted state");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> delta(state.mu.size());
    for (int d = 0; d < n_draws; ++d) {
        for (size_t i = 0; i < delta.size(); ++i)
            delta[i] = state.mu[i] + state.sigma[i] * normal(rng);
        for (size_t k = 0; k < data.fixtures.size(); ++k) {
            const ModelFixture& fx = data.fixtures[k];
            // Side sums of the sampled abilities.
            double smu[2][2] = {{0, 0}, {0, 0}};
            for (int s = 0; s < 2; ++s)
                for (const auto& r : fx.side[s])
                    for (int e = 0; e < 2; ++e) smu[s][e] += delta[rm[r.player] * 2 + e];
            for (int s = 0; s < 2; ++s) {
                for (size_t i = 0; i < fx.side[s].size(); ++i) {
                    const ModelRow& row = fx.side[s][i];
                    for (int e = 0; e < 2; ++e) {
                        const EventParams& p = state.psi.ev[e];
                        double log_eta = delta[rm[row.player] * 2 + e] +
                                         row.tau * (p.lambda1 * smu[s][e] -
                                                    p.lambda2 * smu[1 - s][1 - e]) +
                                         (fx.home_side == s ? p.gamma : 0.0);
                        std::poisson_distribution<long long> pois(std::exp(log_eta) * row.tau);
                        sink(d, static_cast<int>(k), s, static_cast<int>(i), e, pois(rng));
                    }
                }
            }
        }
    }
}

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw DomainError("box_stats requires a non-empty selection");
    std::sort(values.begin(), values.end());
    auto q = [&](double p) {
        double pos = p * (values.size() - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, values.size() - 1);
        double frac = pos - lo;
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    return {values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

std::vector<double> observed_team_totals(const ModelData& data, long long team_id, int e) {
    std::vector<double> totals;
    for (const auto& fx : data.fixtures) {
        for (int s = 0; s < 2; ++s) {
            if (fx.team_id[s] != team_id) continue;
            double total = 0.0;
            for (const auto& row : fx.side[s]) total += row.x[e];
            totals.push_back(total);
        }
    }
    if (totals.empty())
        throw DomainError("team " + std::to_string(team_id) + " has no fixtures");
    return totals;
}

std::vector<double> simulated_team_totals(const ModelData& data, const VariationalState& state,
                                          long long team_id, int e, int n_draws,
                                          std::uint64_t seed) {
    std::vector<double> totals;
    std::map<std::pair<int, int>, size_t> slot;  // (draw, fixture) -> index
    simulate_predictive(data, state, n_draws, seed,
                        [&](int d, int k, int s, int /*i*/, int ev, long long x) {
                            if (ev != e || data.fixtures[k].team_id[s] != team_id) return;
                            auto [it, inserted] = slot.emplace(std::make_pair(d, k), totals.size());
                            if (inserted) totals.push_back(0.0);
                            totals[it->second] += static_cast<double>(x);
                        });
    if (totals.empty())
        throw DomainError("team " + std::to_string(team_id) + " has no fixtures");
    return totals;
}

std::vector<TrajectoryPoint> trajectory(const std::vector<VariationalState>& states,
                                        long long player_id, const std::string& event,
                                        double prior_mean) {
    std::vector<TrajectoryPoint> out;
    for (size_t b = 0; b < states.size(); ++b) {
        TrajectoryPoint pt;
        pt.player_id = player_id;
        pt.event_type = event;
        pt.block_index = static_cast<int>(b);
        pt.mu = prior_mean;
        int e = -1;
        for (int i = 0; i < 2; ++i)
            if (states[b].events[i] == event) e = i;
        if (e >= 0) {
            int p = states[b].index_of(player_id);
            if (p >= 0) pt.mu = states[b].mu[p * 2 + e];
        }
        out.push_back(pt);
    }
    return out;
}

void write_ranking_csv(const PlayerRanking& ranking, const std::string& path) {
    csv::Writer w(path);
    w.row({"rank", "player_id", "quantile_2_5", "mean", "sd", "observed_count", "observed_rank",
           "rank_difference", "minutes_played"});
    for (const auto& r : ranking.rows) {
        w.row({std::to_string(r.rank), std::to_string(r.player_id), csv::fmt(r.quantile_2_5),
               csv::fmt(r.mean), csv::fmt(r.sd), std::to_string(r.observed_count),
               std::to_string(r.observed_rank), std::to_string(r.rank_difference),
               csv::fmt(r.minutes_played)});
    }
}

}  // namespace pitchvi
