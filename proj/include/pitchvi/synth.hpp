#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pitchvi/hier.hpp"
#include "pitchvi/model.hpp"

namespace pitchvi {

// Double round-robin calendar as (home, away) team-index pairs, circle
// method, second half with venues reversed.
std::vector<std::pair<int, int>> round_robin(int n_teams);

struct CountSynthConfig {
    int n_teams = 20;
    int regulars_per_team = 11;
    int fringe_per_team = 3;
    int fringe_appearances = 4;      // short cameos per fringe player
    double fringe_minutes = 2.0;     // per cameo
    double fringe_delta = -20.0;     // effectively event-free
    double delta_mean = 0.0;
    double delta_sd = 1.0;
    EventPair pair{"Goal", "GoalStop"};
    FixedParams psi;
    std::uint64_t seed = 0;
};

struct CountSynthSeason {
    FixtureCountTable counts;
    std::vector<FixtureMeta> fixtures;
    std::vector<PlayerAppearance> appearances;
    AbilityVector truth;  // keyed (player, pair slot)
    FixedParams psi;
    EventPair pair;
    std::vector<long long> regular_players;
    std::vector<long long> fringe_players;
};

// Counts sampled as X ~ Pois(eta * tau) with eta built from the true
// abilities. Regulars play every minute; fringe players get a handful of
// short cameos.
CountSynthSeason generate_count_season(const CountSynthConfig& config);

// Expands a count season to the events/fixtures/appearances files the
// ingestion layer consumes, such that re-aggregation reproduces the counts.
// Composite columns are emitted as a representative member base type.
void write_season_files(const CountSynthSeason& season, const std::string& events_path,
                        const std::string& fixtures_path, const std::string& appearances_path);

struct ScoreSynthConfig {
    int n_teams = 20;
    int churn = 3;  // relegated/promoted between seasons
    double home = 0.3;
    double att_sd = 0.05;
    double def_sd = 0.05;
    double feature_scale = 0.0;  // 0 disables the lineup-ability effect
    std::uint64_t seed = 0;
};

struct TwoSeasonScores {
    std::vector<long long> teams;  // season-1 teams then promoted
    std::vector<long long> promoted;
    double home = 0.0;
    std::map<long long, double> att, def;    // truth; zero-sum over season-1 teams
    std::map<long long, double> g_att, g_def;  // latent feature strengths
    std::vector<MatchResult> season1;
    // Season 2 ordered so that exactly 23 of the first 80 fixtures involve a
    // promoted team, giving prediction blocks of 57/80/80/80/60.
    std::vector<MatchResult> season2;
    std::map<long long, AbilityFeatures> features;  // by fixture id

    std::vector<long long> season1_ids() const;
    std::vector<long long> season2_ids() const;
    const MatchResult& fixture(long long id) const;
    std::vector<MatchResult> all_matches() const;
};

// Scores sampled as y_h ~ Pois(exp(home + att_h + def_a + f_h)) and
// y_a ~ Pois(exp(att_a + def_h + f_a)); f is feature_scale * (g_att of the
// attacking side minus g_def of the defending side).
TwoSeasonScores generate_two_season_scores(const ScoreSynthConfig& config);

}  // namespace pitchvi
