#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pitchvi/vi.hpp"

namespace pitchvi {

// Standard normal inverse CDF, accurate to better than 1e-10 on
// p in [1e-8, 1-1e-8].
double normal_inverse_cdf(double p);

// mu + sigma * Phi^{-1}(p).
double gaussian_quantile(double mu, double sigma, double p);

struct RankedPlayer {
    int rank = 0;
    long long player_id = 0;
    double quantile_2_5 = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    long long observed_count = 0;
    int observed_rank = 0;
    int rank_difference = 0;  // observed_rank - rank
    double minutes_played = 0.0;
};

struct PlayerRanking {
    std::vector<RankedPlayer> rows;
};

// Ranks players by the 2.5% posterior quantile (descending). Observed ranks
// come from season total counts; ties broken by greater total then smaller
// player id.
PlayerRanking rank_players(const VariationalState& state, const std::string& event,
                           const FixtureCountTable& counts, int top_n);

// Posterior predictive simulation: per draw, sample all abilities from q,
// form the rates and sample Poisson counts. The sink receives every cell.
using SimSink = std::function<void(int draw, int fixture, int side, int member, int e,
                                   long long count)>;
void simulate_predictive(const ModelData& data, const VariationalState& state, int n_draws,
                         std::uint64_t seed, const SimSink& sink);

struct BoxStats {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Five-number summary with type-7 (linear interpolation) quartiles.
BoxStats box_stats(std::vector<double> values);

// Per-fixture totals of event slot e for one team, from observed counts.
std::vector<double> observed_team_totals(const ModelData& data, long long team_id, int e);

// Per-(draw, fixture) totals of event slot e for one team, simulated.
std::vector<double> simulated_team_totals(const ModelData& data, const VariationalState& state,
                                          long long team_id, int e, int n_draws,
                                          std::uint64_t seed);

struct TrajectoryPoint {
    long long player_id = 0;
    std::string event_type;
    int block_index = 0;
    double mu = 0.0;
};

// One point per block; players absent from a block carry the prior mean.
std::vector<TrajectoryPoint> trajectory(const std::vector<VariationalState>& states,
                                        long long player_id, const std::string& event,
                                        double prior_mean = -2.0);

void write_ranking_csv(const PlayerRanking& ranking, const std::string& path);

}  // namespace pitchvi
