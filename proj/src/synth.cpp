#include "pitchvi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pitchvi/csv.hpp"

namespace pitchvi {

std::vector<std::pair<int, int>> round_robin(int n_teams) {
    if (n_teams < 2 || n_teams % 2 != 0)
        throw DomainError("round_robin requires an even team count >= 2");
    std::vector<int> ring(n_teams);
    for (int i = 0; i < n_teams; ++i) ring[i] = i;
    std::vector<std::pair<int, int>> out;
    const int rounds = n_teams - 1;
    for (int r = 0; r < rounds; ++r) {
        for (int i = 0; i < n_teams / 2; ++i) {
            int a = ring[i], b = ring[n_teams - 1 - i];
            // Alternate venues by round so home games interleave.
            if (r % 2 == 0)
                out.emplace_back(a, b);
            else
                out.emplace_back(b, a);
        }
        // Rotate all but the first entry.
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
    size_t half = out.size();
    for (size_t i = 0; i < half; ++i) out.emplace_back(out[i].second, out[i].first);
    return out;
}

CountSynthSeason generate_count_season(const CountSynthConfig& config) {
    if (config.n_teams < 2 || config.regulars_per_team < 11)
        throw ValidationError("need at least 2 teams and 11 regulars per team");
    if (config.pair.e1 == config.pair.e2)
        throw ValidationError("event pair must contain two distinct names");
    config.psi.validate();

    CountSynthSeason season;
    season.pair = config.pair;
    season.psi = config.psi;
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal;

    auto team_id = [](int t) { return 100LL + t; };
    auto player_id = [&](int t, int p) { return team_id(t) * 1000 + p + 1; };

    for (int t = 0; t < config.n_teams; ++t) {
        for (int p = 0; p < config.regulars_per_team; ++p) {
            long long id = player_id(t, p);
            season.regular_players.push_back(id);
            for (int e = 0; e < 2; ++e)
                season.truth.delta[{id, e}] =
                    config.delta_mean + config.delta_sd * normal(rng);
        }
        for (int p = 0; p < config.fringe_per_team; ++p) {
            long long id = player_id(t, config.regulars_per_team + p);
            season.fringe_players.push_back(id);
            for (int e = 0; e < 2; ++e) season.truth.delta[{id, e}] = config.fringe_delta;
        }
    }

    auto calendar = round_robin(config.n_teams);
    const int matches_per_team = 2 * (config.n_teams - 1);
    // match_no[t] counts team t's fixtures so far; fringe player p of team t
    // appears in match numbers (p*5 + a*9 + t) mod matches_per_team.
    std::vector<int> match_no(config.n_teams, 0);
    auto fringe_plays = [&](int t, int p, int match) {
        for (int a = 0; a < config.fringe_appearances; ++a)
            if ((p * 5 + a * 9 + t) % matches_per_team == match) return true;
        return false;
    };

    std::vector<std::string> columns = {config.pair.e1, config.pair.e2};
    std::sort(columns.begin(), columns.end());
    season.counts.columns = columns;
    int slot_of_col[2] = {columns[0] == config.pair.e1 ? 0 : 1,
                          columns[1] == config.pair.e1 ? 0 : 1};

    for (size_t k = 0; k < calendar.size(); ++k) {
        long long fid = 1000 + static_cast<long long>(k);
        FixtureMeta meta;
        meta.fixture_id = fid;
        meta.home_team_id = team_id(calendar[k].first);
        meta.away_team_id = team_id(calendar[k].second);
        meta.date = "2013-08-" + std::to_string(1 + k % 28);
        season.fixtures.push_back(meta);

        int side_team[2] = {calendar[k].first, calendar[k].second};
        std::array<std::vector<std::pair<long long, double>>, 2> members;  // (player, tau)
        for (int s = 0; s < 2; ++s) {
            int t = side_team[s];
            for (int p = 0; p < config.regulars_per_team; ++p)
                members[s].emplace_back(player_id(t, p), 1.0);
            for (int p = 0; p < config.fringe_per_team; ++p)
                if (fringe_plays(t, p, match_no[t]))
                    members[s].emplace_back(player_id(t, config.regulars_per_team + p),
                                            compute_tau(config.fringe_minutes));
            ++match_no[t];
        }

        double dsum[2][2] = {{0, 0}, {0, 0}};  // [side][slot]
        for (int s = 0; s < 2; ++s)
            for (const auto& [pid, tau] : members[s])
                for (int e = 0; e < 2; ++e) dsum[s][e] += season.truth.at(pid, e);

        for (int s = 0; s < 2; ++s) {
            for (const auto& [pid, tau] : members[s]) {
                PlayerAppearance app;
                app.fixture_id = fid;
                app.player_id = pid;
                app.team_id = team_id(side_team[s]);
                app.minutes_played = tau * 90.0;
                season.appearances.push_back(app);

                CountRow row;
                row.fixture_id = fid;
                row.player_id = pid;
                row.team_id = app.team_id;
                row.home = s == 0;
                row.tau = tau;
                row.counts.assign(2, 0);
                for (int c = 0; c < 2; ++c) {
                    int e = slot_of_col[c];
                    const EventParams& ep = config.psi.ev[e];
                    double log_eta = season.truth.at(pid, e) +
                                     tau * (ep.lambda1 * dsum[s][e] -
                                            ep.lambda2 * dsum[1 - s][1 - e]) +
                                     (s == 0 ? ep.gamma : 0.0);
                    std::poisson_distribution<long long> pois(std::exp(log_eta) * tau);
                    row.counts[c] = pois(rng);
                }
                season.counts.rows.push_back(std::move(row));
            }
        }
    }
    return season;
}

namespace {

// A base type standing in for each requested column, chosen so no emitted
// event is counted by any other requested column.
std::vector<EventType> choose_representatives(const std::vector<std::string>& columns) {
    const Taxonomy& tax = Taxonomy::standard();
    std::vector<std::set<EventType>> member_sets;
    for (const auto& c : columns) {
        if (c == kChainEventsName)
            throw ValidationError("ChainEvents columns cannot be expanded to events");
        if (const auto* comp = tax.composite(c)) {
            member_sets.emplace_back(comp->begin(), comp->end());
        } else {
            member_sets.insert(member_sets.end(), std::set<EventType>{parse_event_type(c)});
        }
    }
    std::vector<EventType> reps;
    for (size_t i = 0; i < columns.size(); ++i) {
        std::optional<EventType> rep;
        for (EventType cand : member_sets[i]) {
            bool clashes = false;
            for (size_t j = 0; j < columns.size() && !clashes; ++j)
                if (j != i && member_sets[j].count(cand)) clashes = true;
            if (!clashes) {
                rep = cand;
                break;
            }
        }
        if (!rep)
            throw ValidationError("column '" + columns[i] +
                                  "' has no member distinct from the other columns");
        reps.push_back(*rep);
    }
    return reps;
}

}  // namespace

void write_season_files(const CountSynthSeason& season, const std::string& events_path,
                        const std::string& fixtures_path, const std::string& appearances_path) {
    {
        csv::Writer w(fixtures_path);
        w.row({"fixture_id", "home_team_id", "away_team_id", "date"});
        for (const auto& m : season.fixtures)
            w.row({std::to_string(m.fixture_id), std::to_string(m.home_team_id),
                   std::to_string(m.away_team_id), m.date});
    }
    {
        csv::Writer w(appearances_path);
        w.row({"fixture_id", "player_id", "team_id", "minutes_played"});
        for (const auto& a : season.appearances)
            w.row({std::to_string(a.fixture_id), std::to_string(a.player_id),
                   std::to_string(a.team_id), csv::fmt(a.minutes_played)});
    }

    auto reps = choose_representatives(season.counts.columns);
    csv::Writer w(events_path);
    w.row({"fixture_id", "minute", "second", "period", "team_id", "player_id", "type",
           "outcome"});
    long long current_fixture = -1;
    int idx = 0;
    for (const auto& row : season.counts.rows) {
        if (row.fixture_id != current_fixture) {
            current_fixture = row.fixture_id;
            idx = 0;
        }
        for (size_t c = 0; c < season.counts.columns.size(); ++c) {
            for (long long n = 0; n < row.counts[c]; ++n) {
                w.row({std::to_string(row.fixture_id), std::to_string(idx / 60),
                       std::to_string(idx % 60), "FirstHalf", std::to_string(row.team_id),
                       std::to_string(row.player_id), to_string(reps[c]), "Successful"});
                ++idx;
            }
        }
    }
}

std::vector<long long> TwoSeasonScores::season1_ids() const {
    std::vector<long long> ids;
    for (const auto& m : season1) ids.push_back(m.fixture_id);
    return ids;
}

std::vector<long long> TwoSeasonScores::season2_ids() const {
    std::vector<long long> ids;
    for (const auto& m : season2) ids.push_back(m.fixture_id);
    return ids;
}

const MatchResult& TwoSeasonScores::fixture(long long id) const {
    for (const auto& m : season1)
        if (m.fixture_id == id) return m;
    for (const auto& m : season2)
        if (m.fixture_id == id) return m;
    throw ReferentialError("unknown synthetic fixture " + std::to_string(id));
}

std::vector<MatchResult> TwoSeasonScores::all_matches() const {
    std::vector<MatchResult> all = season1;
    all.insert(all.end(), season2.begin(), season2.end());
    return all;
}

TwoSeasonScores generate_two_season_scores(const ScoreSynthConfig& config) {
    if (config.n_teams < 4 || config.n_teams % 2 != 0)
        throw ValidationError("need an even team count >= 4");
    if (config.churn < 0 || config.churn >= config.n_teams)
        throw ValidationError("churn must be in [0, n_teams)");

    TwoSeasonScores out;
    out.home = config.home;
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal;

    const int n = config.n_teams;
    for (int t = 0; t < n; ++t) out.teams.push_back(100 + t);
    for (int t = 0; t < config.churn; ++t) out.promoted.push_back(100 + n + t);

    std::vector<long long> everyone = out.teams;
    everyone.insert(everyone.end(), out.promoted.begin(), out.promoted.end());
    for (long long t : everyone) {
        out.att[t] = config.att_sd * normal(rng);
        out.def[t] = config.def_sd * normal(rng);
        out.g_att[t] = normal(rng);
        out.g_def[t] = normal(rng);
    }
    // Zero-sum truth over the season-1 league.
    double ma = 0.0, md = 0.0;
    for (long long t : out.teams) {
        ma += out.att[t];
        md += out.def[t];
    }
    ma /= n;
    md /= n;
    for (long long t : everyone) {
        out.att[t] -= ma;
        out.def[t] -= md;
    }

    auto starters = [](long long team) {
        std::vector<long long> xi;
        for (int p = 1; p <= 11; ++p) xi.push_back(team * 1000 + p);
        return xi;
    };
    auto play = [&](long long fid, long long home_team, long long away_team) {
        AbilityFeatures f;
        f.f_h = config.feature_scale * (out.g_att.at(home_team) - out.g_def.at(away_team));
        f.f_a = config.feature_scale * (out.g_att.at(away_team) - out.g_def.at(home_team));
        out.features[fid] = f;
        MatchResult m;
        m.fixture_id = fid;
        m.home_team = home_team;
        m.away_team = away_team;
        double th = std::exp(out.home + out.att.at(home_team) + out.def.at(away_team) + f.f_h);
        double ta = std::exp(out.att.at(away_team) + out.def.at(home_team) + f.f_a);
        m.y_h = static_cast<int>(std::poisson_distribution<long long>(th)(rng));
        m.y_a = static_cast<int>(std::poisson_distribution<long long>(ta)(rng));
        m.starters_home = starters(home_team);
        m.starters_away = starters(away_team);
        return m;
    };

    long long fid = 1;
    for (auto [h, a] : round_robin(n)) out.season1.push_back(play(fid++, out.teams[h], out.teams[a]));

    std::vector<long long> s2_teams(out.teams.begin(), out.teams.end() - config.churn);
    s2_teams.insert(s2_teams.end(), out.promoted.begin(), out.promoted.end());
    for (auto [h, a] : round_robin(n)) out.season2.push_back(play(fid++, s2_teams[h], s2_teams[a]));

    // Arrange season 2 so the first 80 fixtures contain exactly 23 involving
    // a promoted team; the first prediction block then holds the other 57.
    if (out.season2.size() >= 80 && !out.promoted.empty()) {
        std::set<long long> promo(out.promoted.begin(), out.promoted.end());
        auto involves = [&](const MatchResult& m) {
            return promo.count(m.home_team) || promo.count(m.away_team);
        };
        auto count_front = [&] {
            int c = 0;
            for (size_t i = 0; i < 80; ++i) c += involves(out.season2[i]);
            return c;
        };
        size_t lo = 0, hi = 80;
        while (count_front() < 23) {
            while (lo < 80 && involves(out.season2[lo])) ++lo;
            while (hi < out.season2.size() && !involves(out.season2[hi])) ++hi;
            if (lo >= 80 || hi >= out.season2.size()) break;
            std::swap(out.season2[lo], out.season2[hi]);
        }
        lo = 0;
        hi = 80;
        while (count_front() > 23) {
            while (lo < 80 && !involves(out.season2[lo])) ++lo;
            while (hi < out.season2.size() && involves(out.season2[hi])) ++hi;
            if (lo >= 80 || hi >= out.season2.size()) break;
            std::swap(out.season2[lo], out.season2[hi]);
        }
    }
    return out;
}

}  // namespace pitchvi
