#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pitchvi/model.hpp"

using namespace pitchvi;
using pitchvi::test::count_row;

namespace {

// One fixture, one player per side, unit tau.
FixtureCountTable tiny_table(long long x_home_e1 = 0, long long x_away_e2 = 0) {
    FixtureCountTable t;
    t.columns = {"Goal", "GoalStop"};
    t.rows.push_back(count_row(1, 100, 10, true, 1.0, {x_home_e1, 0}));
    t.rows.push_back(count_row(1, 200, 20, false, 1.0, {0, x_away_e2}));
    return t;
}

}  // namespace

TEST_CASE("ModelData::build indexes players and sides") {
    auto data = ModelData::build(tiny_table(), {"Goal", "GoalStop"});
    CHECK(data.players() == 2);
    REQUIRE(data.fixtures.size() == 1);
    const auto& fx = data.fixtures[0];
    CHECK(fx.side[0].size() == 1);
    CHECK(fx.side[1].size() == 1);
    CHECK(fx.team_id[fx.home_side] == 10);

    SUBCASE("tau = 0 rows are dropped") {
        FixtureCountTable t = tiny_table();
        t.rows.push_back(count_row(1, 300, 20, false, 0.0, {0, 0}));
        auto d = ModelData::build(t, {"Goal", "GoalStop"});
        CHECK(d.players() == 2);
    }
    SUBCASE("tau = 0 with events is inconsistent") {
        FixtureCountTable t = tiny_table();
        t.rows.push_back(count_row(1, 300, 20, false, 0.0, {1, 0}));
        CHECK_THROWS_AS(ModelData::build(t, {"Goal", "GoalStop"}), DataError);
    }
    SUBCASE("three teams in a fixture fail fast") {
        FixtureCountTable t = tiny_table();
        t.rows.push_back(count_row(1, 300, 30, false, 1.0, {0, 0}));
        CHECK_THROWS_AS(ModelData::build(t, {"Goal", "GoalStop"}), DataError);
    }
    SUBCASE("missing pair column") {
        CHECK_THROWS_AS(ModelData::build(tiny_table(), {"Goal", "Shots"}), ReferentialError);
    }
}

TEST_CASE("eta hand evaluations") {
    auto data = ModelData::build(tiny_table(), {"Goal", "GoalStop"});
    int home_side = data.fixtures[0].home_side;
    FixedParams psi;  // lambda 1e-3, gamma 0

    std::vector<double> zeros(4, 0.0);
    CHECK(eta(data, 0, 1 - home_side, 0, 0, zeros, psi) == doctest::Approx(1.0));

    psi.ev[0].gamma = 0.165;
    CHECK(eta(data, 0, home_side, 0, 0, zeros, psi) == doctest::Approx(std::exp(0.165)));
    CHECK(eta(data, 0, 1 - home_side, 0, 0, zeros, psi) == doctest::Approx(1.0));

    // Delta_self = 1, Delta_opp = 1, tau = 1, lambda1 = lambda2 = 0.5, away.
    psi.ev[0] = {0.5, 0.5, 0.0};
    psi.ev[1] = {0.5, 0.5, 0.0};
    std::vector<double> ones(4, 1.0);
    CHECK(eta(data, 0, 1 - home_side, 0, 0, ones, psi) ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("eta own-team translation degeneracy") {
    auto inst = pitchvi::test::random_instance(7);
    const auto& data = inst.data;
    std::vector<double> delta = inst.state.mu;
    FixedParams psi = inst.state.psi;

    const auto& fx = data.fixtures[0];
    const int s = 0, e = 0;
    const ModelRow& row = fx.side[s][0];
    double before = eta(data, 0, s, 0, e, delta, psi);

    const double c = 0.37;
    std::vector<double> shifted = delta;
    for (const auto& r : fx.side[s]) shifted[r.player * 2 + e] += c;
    double after = eta(data, 0, s, 0, e, shifted, psi);
    double expected_factor =
        std::exp(c * (1.0 + row.tau * psi.ev[e].lambda1 * fx.side[s].size()));
    CHECK(after / before == doctest::Approx(expected_factor).epsilon(1e-10));
}

TEST_CASE("poisson_log_pmf matches an independent evaluation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> runif(0.01, 20.0);
    std::uniform_int_distribution<int> rx(0, 30);
    for (int i = 0; i < 200; ++i) {
        double rate = runif(rng);
        double x = rx(rng);
        double direct = x * std::log(rate) - rate - std::lgamma(x + 1.0);
        CHECK(poisson_log_pmf(x, rate) == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK(poisson_log_pmf(0.0, 0.0) == 0.0);
}

TEST_CASE("log_likelihood hand values") {
    SUBCASE("X = 0, eta*tau = 1 gives -1") {
        auto data = ModelData::build(tiny_table(0, 0), {"Goal", "GoalStop"});
        FixedParams psi;
        psi.ev[0].lambda1 = psi.ev[0].lambda2 = 1e-300;
        psi.ev[1].lambda1 = psi.ev[1].lambda2 = 1e-300;
        std::vector<double> zeros(4, 0.0);
        // Four rows (2 players x 2 events), each contributing -1.
        CHECK(log_likelihood(data, zeros, psi) == doctest::Approx(-4.0));
    }
    SUBCASE("X = 2, eta*tau = 2 gives ln2 - 2 per matching row") {
        auto data = ModelData::build(tiny_table(2, 0), {"Goal", "GoalStop"});
        FixedParams psi;
        psi.ev[0].lambda1 = psi.ev[0].lambda2 = 1e-300;
        psi.ev[1].lambda1 = psi.ev[1].lambda2 = 1e-300;
        std::vector<double> delta(4, 0.0);
        int home_side = data.fixtures[0].home_side;
        // Give the home player log 2 ability in slot 0 so its rate is 2.
        for (const auto& r : data.fixtures[0].side[home_side])
            delta[r.player * 2 + 0] = std::log(2.0);
        double direct = 0.0;
        for (int e = 0; e < 2; ++e)
            for (int s = 0; s < 2; ++s)
                for (size_t i = 0; i < data.fixtures[0].side[s].size(); ++i) {
                    const ModelRow& row = data.fixtures[0].side[s][i];
                    double rate = eta(data, 0, s, static_cast<int>(i), e, delta, psi) * row.tau;
                    direct += poisson_log_pmf(row.x[e], rate);
                }
        CHECK(log_likelihood(data, delta, psi) == doctest::Approx(direct).epsilon(1e-14));
        // And the X=2 row's own term is ln2 - 2.
        double rate = 2.0;
        CHECK(poisson_log_pmf(2.0, rate) ==
              doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-12));
    }
    SUBCASE("empty table gives 0") {
        FixtureCountTable t;
        t.columns = {"Goal", "GoalStop"};
        auto data = ModelData::build(t, {"Goal", "GoalStop"});
        CHECK(log_likelihood(data, std::vector<double>{}, FixedParams{}) == 0.0);
    }
}

TEST_CASE("log_likelihood agrees with independent per-term pmf on random instances") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = pitchvi::test::random_instance(seed);
        double direct = 0.0;
        for (size_t k = 0; k < inst.data.fixtures.size(); ++k)
            for (int e = 0; e < 2; ++e)
                for (int s = 0; s < 2; ++s)
                    for (size_t i = 0; i < inst.data.fixtures[k].side[s].size(); ++i) {
                        const ModelRow& row = inst.data.fixtures[k].side[s][i];
                        double rate = eta(inst.data, static_cast<int>(k), s,
                                          static_cast<int>(i), e, inst.state.mu,
                                          inst.state.psi) *
                                      row.tau;
                        direct += poisson_log_pmf(row.x[e], rate);
                    }
        CHECK(log_likelihood(inst.data, inst.state.mu, inst.state.psi) ==
              doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("log_prior") {
    PriorSpec prior;  // N(-2, 4)
    AbilityVector one;
    one.delta[{1, 0}] = -2.0;
    CHECK(log_prior(one, prior) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI * 4.0)).epsilon(1e-12));

    AbilityVector two = one;
    two.delta[{2, 0}] = -2.0;
    CHECK(log_prior(two, prior) == doctest::Approx(2.0 * log_prior(one, prior)).epsilon(1e-12));

    AbilityVector empty;
    CHECK(log_prior(empty, prior) == 0.0);
}

TEST_CASE("AbilityVector reports missing entries") {
    AbilityVector v;
    v.delta[{1, 0}] = 0.5;
    CHECK(v.at(1, 0) == 0.5);
    CHECK_THROWS_AS(v.at(1, 1), ReferentialError);
}
