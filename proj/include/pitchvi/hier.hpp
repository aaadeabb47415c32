#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pitchvi/events.hpp"
#include "pitchvi/vi.hpp"

namespace pitchvi {

struct MatchResult {
    long long fixture_id = 0;
    long long home_team = 0;
    long long away_team = 0;
    int y_h = 0;
    int y_a = 0;
    std::vector<long long> starters_home;  // exactly 11 when used for f(delta)
    std::vector<long long> starters_away;
};

// Lineup-ability features added to the log scoring intensities.
struct AbilityFeatures {
    double f_h = 0.0;
    double f_a = 0.0;
};

enum class FDeltaMode { SinglePair, Multi };

// Multi mode: f_h = sum over home XI of (Goal + Shots + ChainEvents) minus
// sum over away XI of (GoalStop + ShotStop + AntiPass); f_a symmetric.
// Single-pair mode uses the state's own event pair the same way.
// `ability` maps (event name, player) to a posterior mean; players without an
// entry use `prior_mean`.
using AbilityLookup = std::function<std::optional<double>(const std::string& event,
                                                          long long player)>;
AbilityFeatures f_delta(const MatchResult& fixture, const AbilityLookup& ability,
                        FDeltaMode mode, const EventPair& pair = {"Goal", "GoalStop"},
                        double prior_mean = -2.0);

AbilityLookup ability_lookup_from_states(const std::vector<VariationalState>& states);

// One posterior draw; att/def indexed like HierPosterior::teams and summing
// to zero.
struct HierDraw {
    double home = 0.0;
    double mu_att = 0.0, mu_def = 0.0;
    double sigma_att = 1.0, sigma_def = 1.0;
    std::vector<double> att, def;
};

struct HierDiagnostics {
    double acceptance_rate = 0.0;
    std::map<std::string, double> ess;       // effective sample sizes
    std::map<std::string, double> rhat;      // split-chain potential scale reduction
};

struct HierPosterior {
    std::vector<long long> teams;
    std::vector<HierDraw> draws;
    HierDiagnostics diagnostics;

    int team_index(long long team) const;  // -1 when unseen
};

struct McmcConfig {
    int n_draws = 10000;  // stored post-warmup, across chains
    int warmup = 5000;
    int thin = 10;
    int n_chains = 4;
    std::uint64_t seed = 0;
};

// Log posterior density of the (possibly ability-extended) hierarchical goal
// model; -inf for sigma <= 0. Features default to zero (baseline model).
double hier_log_posterior(const HierDraw& draw, const std::vector<long long>& teams,
                          const std::vector<MatchResult>& data,
                          const std::vector<AbilityFeatures>* features = nullptr);

// Adaptive random-walk Metropolis in the unconstrained parameterization
// (T-1 free attack/defence coordinates, log scales).
HierPosterior mcmc_fit(const std::vector<MatchResult>& data,
                       const std::vector<AbilityFeatures>* features, const McmcConfig& config);

// Mean over draws of P(N >= ceil(threshold)) with N ~ Pois(theta_h+theta_a).
double predict_over_under(const HierPosterior& posterior, const MatchResult& fixture,
                          const AbilityFeatures* features = nullptr, double threshold = 2.5);

// P(N >= ceil(threshold)) for a single rate.
double poisson_tail_over(double theta, double threshold = 2.5);

struct BlockSchedule {
    // blocks[0] is the full training season; blocks[b>=1] are the fit
    // increments. Prediction block b = blocks[b] restricted to teams seen in
    // blocks[0..b-1].
    std::vector<std::vector<long long>> blocks;
};

// Season-2 fixture list split into chunks of 80/80/80/80/60 after the
// season-1 training block.
BlockSchedule make_block_schedule(const std::vector<long long>& season1,
                                  const std::vector<long long>& season2);

struct BlockPrediction {
    long long fixture_id = 0;
    int block = 0;
    double p_over = 0.0;
    bool actual_over = false;
};

enum class HierModel { Baseline, Extended };

// Per prediction block: fit on all past blocks, predict the next one.
// `features_for` supplies f(delta) for a fixture given the fit-block index;
// required for Extended, ignored for Baseline.
std::vector<BlockPrediction> run_block_experiment(
    const std::vector<MatchResult>& all_data, const BlockSchedule& schedule, HierModel model,
    const McmcConfig& config,
    const std::function<AbilityFeatures(int block, const MatchResult&)>& features_for = {},
    std::vector<long long>* excluded = nullptr);

struct RocPoint {
    double fpr = 0.0, tpr = 0.0, threshold = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// Threshold sweep over distinct scores; trapezoidal AUC (equals the
// Mann-Whitney statistic with the tie correction).
RocResult roc_auc(const std::vector<std::pair<double, bool>>& scores);

std::vector<MatchResult> read_results_csv(const std::string& path);
void write_results_csv(const std::vector<MatchResult>& results, const std::string& path);

// Goals and starting XIs from a parsed touch log.
std::vector<MatchResult> extract_match_results(const TouchLog& log);

void save_draws_json(const HierPosterior& posterior, const std::string& path);
HierPosterior load_draws_json(const std::string& path);

}  // namespace pitchvi
