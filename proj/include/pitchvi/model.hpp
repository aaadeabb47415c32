#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pitchvi/events.hpp"

namespace pitchvi {

struct PriorSpec {
    double m = -2.0;
    double s = 2.0;
};

struct EventPair {
    std::string e1;
    std::string e2;
};

struct EventParams {
    double lambda1 = 1e-3;
    double lambda2 = 1e-3;
    double gamma = 0.0;
};

// Per-event-type fixed parameters; slot 0/1 follows the EventPair order.
struct FixedParams {
    std::array<EventParams, 2> ev;

    void validate() const {
        for (const auto& p : ev)
            if (!(p.lambda1 > 0.0) || !(p.lambda2 > 0.0))
                throw DomainError("lambda parameters must be positive");
    }
};

// Latent abilities keyed by (player_id, event slot).
struct AbilityVector {
    std::map<std::pair<long long, int>, double> delta;

    double at(long long player, int e) const {
        auto it = delta.find({player, e});
        if (it == delta.end())
            throw ReferentialError("no ability entry for player " + std::to_string(player) +
                                   " event slot " + std::to_string(e));
        return it->second;
    }
};

// Count table compiled for one interacting event pair: players densely
// indexed, rows grouped by fixture and side. Rows with tau = 0 (and no
// events) carry no information and are dropped at build time.
struct ModelRow {
    int player = 0;   // index into player_ids
    double tau = 0.0;
    double log_tau = 0.0;
    std::array<double, 2> x{0.0, 0.0};
};

struct ModelFixture {
    long long fixture_id = 0;
    std::array<std::vector<ModelRow>, 2> side;
    std::array<long long, 2> team_id{0, 0};
    int home_side = 0;  // 0 or 1
};

struct ModelData {
    std::array<std::string, 2> events;
    std::vector<long long> player_ids;
    std::unordered_map<long long, int> player_index;
    std::vector<ModelFixture> fixtures;

    int players() const { return static_cast<int>(player_ids.size()); }

    static ModelData build(const FixtureCountTable& counts, const EventPair& pair);
};

// Poisson rate of Eq.-style form: exp{D_i + tau(l1*sum_own D - l2*sum_opp
// D_other) + home*gamma}. The own-team sum includes player i.
double eta(const ModelData& data, int fixture, int side, int member, int e,
           std::span<const double> delta, const FixedParams& psi);

// delta laid out as player*2 + e.
double log_likelihood(const ModelData& data, std::span<const double> delta,
                      const FixedParams& psi);

// Map-keyed variants for oracle-style use.
double log_likelihood(const ModelData& data, const AbilityVector& deltas,
                      const FixedParams& psi);

double log_prior(std::span<const double> delta, const PriorSpec& prior);
double log_prior(const AbilityVector& deltas, const PriorSpec& prior);

// log Pois(x; rate) including the log(x!) term.
double poisson_log_pmf(double x, double rate);

}  // namespace pitchvi
