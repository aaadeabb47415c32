#include "pitchvi/model.hpp"

#include <cmath>

namespace pitchvi {

ModelData ModelData::build(const FixtureCountTable& counts, const EventPair& pair) {
    if (pair.e1 == pair.e2) throw DomainError("event pair must contain two distinct event types");
    int c1 = counts.column_index(pair.e1);
    int c2 = counts.column_index(pair.e2);
    if (c1 < 0 || c2 < 0)
        throw ReferentialError("count table lacks event pair columns " + pair.e1 + "," + pair.e2);

    ModelData data;
    data.events = {pair.e1, pair.e2};

    std::map<long long, ModelFixture> by_fixture;
    for (const auto& row : counts.rows) {
        if (row.tau == 0.0) {
            if (row.counts[c1] > 0 || row.counts[c2] > 0)
                throw DataError("player " + std::to_string(row.player_id) + " in fixture " +
                                std::to_string(row.fixture_id) +
                                " has events but zero playing time");
            continue;
        }
        auto& fx = by_fixture[row.fixture_id];
        fx.fixture_id = row.fixture_id;
        int side;
        if (fx.team_id[0] == 0 || fx.team_id[0] == row.team_id) {
            side = 0;
        } else if (fx.team_id[1] == 0 || fx.team_id[1] == row.team_id) {
            side = 1;
        } else {
            throw DataError("fixture " + std::to_string(row.fixture_id) +
                            " has more than two teams");
        }
        fx.team_id[side] = row.team_id;
        if (row.home) fx.home_side = side;

        auto [it, inserted] = data.player_index.emplace(row.player_id, data.players());
        if (inserted) data.player_ids.push_back(row.player_id);

        ModelRow mr;
        mr.player = it->second;
        mr.tau = row.tau;
        mr.log_tau = std::log(row.tau);
        mr.x = {static_cast<double>(row.counts[c1]), static_cast<double>(row.counts[c2])};
        fx.side[side].push_back(mr);
    }
    data.fixtures.reserve(by_fixture.size());
    for (auto& [_, fx] : by_fixture) data.fixtures.push_back(std::move(fx));
    return data;
}

double eta(const ModelData& data, int fixture, int side, int member, int e,
           std::span<const double> delta, const FixedParams& psi) {
    psi.validate();
    const ModelFixture& fx = data.fixtures[fixture];
    const ModelRow& row = fx.side[side][member];
    const EventParams& p = psi.ev[e];
    int other = 1 - e;

    double own = 0.0, opp = 0.0;
    for (const auto& r : fx.side[side]) own += delta[r.player * 2 + e];
    for (const auto& r : fx.side[1 - side]) opp += delta[r.player * 2 + other];

    double log_eta = delta[row.player * 2 + e] + row.tau * (p.lambda1 * own - p.lambda2 * opp);
    if (fx.home_side == side) log_eta += p.gamma;
    return std::exp(log_eta);
}

double poisson_log_pmf(double x, double rate) {
    if (rate <= 0.0) return x == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return x * std::log(rate) - rate - std::lgamma(x + 1.0);
}

double log_likelihood(const ModelData& data, std::span<const double> delta,
                      const FixedParams& psi) {
    double ll = 0.0;
    for (size_t k = 0; k < data.fixtures.size(); ++k) {
        const ModelFixture& fx = data.fixtures[k];
        for (int e = 0; e < 2; ++e) {
            for (int s = 0; s < 2; ++s) {
                for (size_t i = 0; i < fx.side[s].size(); ++i) {
                    const ModelRow& row = fx.side[s][i];
                    double rate =
                        eta(data, static_cast<int>(k), s, static_cast<int>(i), e, delta, psi) *
                        row.tau;
                    ll += poisson_log_pmf(row.x[e], rate);
                }
            }
        }
    }
    return ll;
}

double log_likelihood(const ModelData& data, const AbilityVector& deltas,
                      const FixedParams& psi) {
    std::vector<double> dense(data.players() * 2);
    for (int p = 0; p < data.players(); ++p)
        for (int e = 0; e < 2; ++e) dense[p * 2 + e] = deltas.at(data.player_ids[p], e);
    return log_likelihood(data, dense, psi);
}

double log_prior(std::span<const double> delta, const PriorSpec& prior) {
    if (!(prior.s > 0.0)) throw DomainError("prior sd must be positive");
    double lp = 0.0;
    const double log_norm = -0.5 * std::log(2.0 * M_PI * prior.s * prior.s);
    for (double d : delta) {
        double z = d - prior.m;
        lp += log_norm - z * z / (2.0 * prior.s * prior.s);
    }
    return lp;
}

double log_prior(const AbilityVector& deltas, const PriorSpec& prior) {
    std::vector<double> dense;
    dense.reserve(deltas.delta.size());
    for (const auto& [_, v] : deltas.delta) dense.push_back(v);
    return log_prior(dense, prior);
}

}  // namespace pitchvi
