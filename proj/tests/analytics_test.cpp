#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "pitchvi/analytics.hpp"

using namespace pitchvi;
using namespace pitchvi::test;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Published top-10 Goal ranking: (2.5% quantile, mean, sd, season goals,
// minutes played), in rank order.
struct PublishedRow {
    double q, mu, sd;
    long long goals;
    double minutes;
};
const PublishedRow kGoalTop10[] = {
    {0.508, 0.869, 0.184, 31, 3185},
    {0.176, 0.617, 0.225, 21, 2414},
    {0.147, 0.636, 0.250, 17, 1616},
    {-0.043, 0.395, 0.224, 20, 3113},
    {-0.056, 0.421, 0.243, 17, 2625},
    {-0.065, 0.424, 0.249, 16, 2128},
    {-0.136, 0.430, 0.289, 12, 1690},
    {-0.230, 0.302, 0.271, 14, 2274},
    {-0.257, 0.238, 0.252, 16, 2644},
    {-0.354, 0.161, 0.263, 15, 2758},
};

VariationalState top10_state() {
    VariationalState state;
    state.events = {"Goal", "GoalStop"};
    for (int i = 0; i < 10; ++i) {
        state.player_ids.push_back(i + 1);
        state.mu.push_back(kGoalTop10[i].mu);
        state.sigma.push_back(kGoalTop10[i].sd);
        state.mu.push_back(0.0);
        state.sigma.push_back(0.5);
    }
    return state;
}

FixtureCountTable top10_counts() {
    FixtureCountTable counts;
    counts.columns = {"Goal"};
    for (int i = 0; i < 10; ++i)
        counts.rows.push_back(count_row(1, i + 1, 10, true, kGoalTop10[i].minutes / 90.0,
                                        {kGoalTop10[i].goals}));
    return counts;
}

}  // namespace

TEST_CASE("normal_inverse_cdf matches known quantiles") {
    CHECK(normal_inverse_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_inverse_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(normal_inverse_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-10));
    CHECK(normal_inverse_cdf(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(normal_inverse_cdf(0.001) == doctest::Approx(-3.090232306167814).epsilon(1e-10));
}

TEST_CASE("normal_inverse_cdf is an inverse of the normal CDF") {
    for (double p : {1e-8, 1e-6, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.9999, 1 - 1e-8}) {
        double x = normal_inverse_cdf(p);
        CHECK(std::abs(normal_cdf(x) - p) < 1e-12);
    }
}

TEST_CASE("normal_inverse_cdf rejects boundary probabilities") {
    CHECK_THROWS_AS(normal_inverse_cdf(0.0), DomainError);
    CHECK_THROWS_AS(normal_inverse_cdf(1.0), DomainError);
    CHECK_THROWS_AS(normal_inverse_cdf(-0.1), DomainError);
}

TEST_CASE("gaussian_quantile fixtures") {
    CHECK(std::abs(gaussian_quantile(0.869, 0.184, 0.025) - 0.508) < 1e-3);
    CHECK(std::abs(gaussian_quantile(2.900, 0.177, 0.025) - 2.553) < 1e-3);
    CHECK(gaussian_quantile(-1.3, 0.7, 0.5) == doctest::Approx(-1.3).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_quantile(0.0, 0.0, 0.5), DomainError);
    CHECK_THROWS_AS(gaussian_quantile(0.0, -1.0, 0.5), DomainError);
}

TEST_CASE("gaussian_quantile is monotone in p") {
    double prev = -1e300;
    for (double p = 0.01; p < 1.0; p += 0.01) {
        double q = gaussian_quantile(0.3, 0.8, p);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("rank_players reproduces the published Goal top-10 order") {
    auto ranking = rank_players(top10_state(), "Goal", top10_counts(), 10);
    REQUIRE(ranking.rows.size() == 10);
    for (int i = 0; i < 10; ++i) {
        const auto& r = ranking.rows[i];
        CHECK(r.rank == i + 1);
        CHECK(r.player_id == i + 1);
        // The published mean and sd are themselves rounded to three decimals,
        // so the recomputed quantile can be off by a shade over 1e-3.
        CHECK(std::abs(r.quantile_2_5 - kGoalTop10[i].q) < 2e-3);
        CHECK(r.mean == kGoalTop10[i].mu);
        CHECK(r.sd == kGoalTop10[i].sd);
        CHECK(r.observed_count == kGoalTop10[i].goals);
        CHECK(r.minutes_played == doctest::Approx(kGoalTop10[i].minutes).epsilon(1e-9));
        CHECK(r.rank_difference == r.observed_rank - r.rank);
    }
}

TEST_CASE("rank_players observed ranks sort totals with id tie-break") {
    auto ranking = rank_players(top10_state(), "Goal", top10_counts(), 10);
    // Goals descending: 31, 21, 20, 17, 17, 16, 16, 15, 14, 12 with the two
    // ties resolved toward the smaller player id.
    std::map<long long, int> obs;
    for (const auto& r : ranking.rows) obs[r.player_id] = r.observed_rank;
    CHECK(obs[1] == 1);
    CHECK(obs[2] == 2);
    CHECK(obs[4] == 3);
    CHECK(obs[3] == 4);
    CHECK(obs[5] == 5);
    CHECK(obs[6] == 6);
    CHECK(obs[9] == 7);
    CHECK(obs[10] == 8);
    CHECK(obs[8] == 9);
    CHECK(obs[7] == 10);
}

TEST_CASE("rank_players truncates to top_n and handles the second slot") {
    auto ranking = rank_players(top10_state(), "Goal", top10_counts(), 3);
    REQUIRE(ranking.rows.size() == 3);
    CHECK(ranking.rows[2].player_id == 3);

    // All slot-1 factors are identical, so ranking on GoalStop falls back to
    // the player-id tie-break.
    auto other = rank_players(top10_state(), "GoalStop", top10_counts(), 10);
    for (int i = 0; i < 10; ++i) CHECK(other.rows[i].player_id == i + 1);

    CHECK_THROWS_AS(rank_players(top10_state(), "Pass", top10_counts(), 5), ReferentialError);
}

TEST_CASE("box_stats uses linear interpolation quartiles") {
    BoxStats b = box_stats({4.0, 1.0, 3.0, 2.0});
    CHECK(b.min == 1.0);
    CHECK(b.q1 == doctest::Approx(1.75));
    CHECK(b.median == doctest::Approx(2.5));
    CHECK(b.q3 == doctest::Approx(3.25));
    CHECK(b.max == 4.0);

    BoxStats single = box_stats({7.0});
    CHECK(single.min == 7.0);
    CHECK(single.median == 7.0);
    CHECK(single.max == 7.0);

    BoxStats five = box_stats({10.0, 20.0, 30.0, 40.0, 50.0});
    CHECK(five.q1 == doctest::Approx(20.0));
    CHECK(five.median == doctest::Approx(30.0));
    CHECK(five.q3 == doctest::Approx(40.0));

    CHECK_THROWS_AS(box_stats({}), DomainError);
}

TEST_CASE("simulate_predictive cell means match the Poisson rates") {
    // Near-degenerate q concentrates the rates, so each simulated cell is a
    // plain Poisson draw whose mean we can check against the closed form.
    FixtureCountTable counts;
    counts.columns = {"Goal", "GoalStop"};
    counts.rows.push_back(count_row(500, 1, 10, true, 1.0, {0, 0}));
    counts.rows.push_back(count_row(500, 2, 10, true, 0.5, {0, 0}));
    counts.rows.push_back(count_row(500, 3, 11, false, 1.0, {0, 0}));
    ModelData data = ModelData::build(counts, {"Goal", "GoalStop"});

    VariationalState state;
    state.events = data.events;
    state.player_ids = data.player_ids;
    state.mu = {0.2, -0.5, -1.0, 0.4, 0.1, -0.8};
    state.sigma.assign(6, 1e-12);
    state.psi.ev[0] = {0.05, 0.02, 0.1};
    state.psi.ev[1] = {0.03, 0.04, -0.2};

    const int n_draws = 20000;
    std::map<std::array<int, 4>, double> sums;
    simulate_predictive(data, state, n_draws, 99,
                        [&](int, int k, int s, int i, int e, long long x) {
                            sums[{k, s, i, e}] += static_cast<double>(x);
                        });
    CHECK(sums.size() == 6);
    for (const auto& [key, sum] : sums) {
        auto [k, s, i, e] = key;
        double rate = eta(data, k, s, i, e, state.mu, state.psi) * data.fixtures[k].side[s][i].tau;
        double se = std::sqrt(rate / n_draws);
        CHECK(std::abs(sum / n_draws - rate) < 5.0 * se + 1e-9);
    }
}

TEST_CASE("simulate_predictive is deterministic and validates input") {
    auto inst = random_instance(42);
    std::vector<long long> a, b;
    simulate_predictive(inst.data, inst.state, 3, 7,
                        [&](int, int, int, int, int, long long x) { a.push_back(x); });
    simulate_predictive(inst.data, inst.state, 3, 7,
                        [&](int, int, int, int, int, long long x) { b.push_back(x); });
    CHECK(a == b);
    CHECK_THROWS_AS(
        simulate_predictive(inst.data, inst.state, 0, 7, [](int, int, int, int, int, long long) {}),
        DomainError);

    // A state missing one of the data's players cannot be simulated from.
    VariationalState trimmed = inst.state;
    trimmed.player_ids.pop_back();
    trimmed.mu.resize(trimmed.player_ids.size() * 2);
    trimmed.sigma.resize(trimmed.player_ids.size() * 2);
    CHECK_THROWS_AS(
        simulate_predictive(inst.data, trimmed, 1, 7, [](int, int, int, int, int, long long) {}),
        ReferentialError);
}

TEST_CASE("observed_team_totals sums counts per fixture") {
    FixtureCountTable counts;
    counts.columns = {"Goal", "GoalStop"};
    counts.rows.push_back(count_row(500, 1, 10, true, 1.0, {2, 1}));
    counts.rows.push_back(count_row(500, 2, 10, true, 1.0, {1, 0}));
    counts.rows.push_back(count_row(500, 3, 11, false, 1.0, {0, 4}));
    counts.rows.push_back(count_row(501, 1, 10, false, 1.0, {1, 1}));
    counts.rows.push_back(count_row(501, 3, 11, true, 1.0, {2, 2}));
    ModelData data = ModelData::build(counts, {"Goal", "GoalStop"});

    CHECK(observed_team_totals(data, 10, 0) == std::vector<double>{3.0, 1.0});
    CHECK(observed_team_totals(data, 11, 1) == std::vector<double>{4.0, 2.0});
    CHECK_THROWS_AS(observed_team_totals(data, 12, 0), DomainError);
}

TEST_CASE("simulated_team_totals has one entry per draw and fixture") {
    auto inst = random_instance(5);
    long long team = 10;
    int fixtures_of_team = 0;
    for (const auto& fx : inst.data.fixtures)
        for (int s = 0; s < 2; ++s)
            if (fx.team_id[s] == team) ++fixtures_of_team;

    auto totals = simulated_team_totals(inst.data, inst.state, team, 0, 4, 11);
    CHECK(totals.size() == static_cast<size_t>(4 * fixtures_of_team));
    CHECK(totals == simulated_team_totals(inst.data, inst.state, team, 0, 4, 11));
}

TEST_CASE("trajectory carries the prior mean through absent blocks") {
    VariationalState a = top10_state();
    VariationalState b = top10_state();
    b.player_ids.erase(b.player_ids.begin());  // drop player 1
    b.mu.erase(b.mu.begin(), b.mu.begin() + 2);
    b.sigma.erase(b.sigma.begin(), b.sigma.begin() + 2);

    auto pts = trajectory({a, b, a}, 1, "Goal");
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].block_index == 0);
    CHECK(pts[0].mu == doctest::Approx(0.869));
    CHECK(pts[1].mu == doctest::Approx(-2.0));
    CHECK(pts[2].mu == doctest::Approx(0.869));
    for (const auto& p : pts) {
        CHECK(p.player_id == 1);
        CHECK(p.event_type == "Goal");
    }

    auto other = trajectory({a}, 1, "Shots", -1.5);
    CHECK(other[0].mu == doctest::Approx(-1.5));
}
