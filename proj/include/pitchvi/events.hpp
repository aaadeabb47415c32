#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pitchvi/errors.hpp"

namespace pitchvi {

enum class Period : std::uint8_t { FirstHalf, SecondHalf };
enum class Outcome : std::uint8_t { Successful, Unsuccessful };
enum class EventCategory : std::uint8_t { Stop, Control, Disruption, Miscellanea };

// The closed 39-name event vocabulary. Order is alphabetical; parsing of any
// name outside this list is a VocabularyError.
enum class EventType : std::uint8_t {
    Aerial,
    BallRecovery,
    BallTouch,
    BlockedPass,
    Card,
    Challenge,
    ChanceMissed,
    Claim,
    Clearance,
    CornerAwarded,
    CrossNotClaimed,
    Dispossessed,
    End,
    Error,
    FormationChange,
    FormationSet,
    Foul,
    Goal,
    GoodSkill,
    Interception,
    KeeperPickup,
    KeeperSweeper,
    MissedShots,
    OffsideGiven,
    OffsidePass,
    OffsideProvoked,
    Pass,
    PenaltyFaced,
    Punch,
    Save,
    SavedShot,
    ShieldBallOpp,
    ShotOnPost,
    Smother,
    Start,
    SubstitutionOff,
    SubstitutionOn,
    Tackle,
    TakeOn,
};

inline constexpr int kNumEventTypes = 39;

const char* to_string(EventType t);
std::optional<EventType> try_parse_event_type(std::string_view name);
EventType parse_event_type(std::string_view name);  // throws VocabularyError
EventCategory category(EventType t);

struct RawTouchEvent {
    int minute = 0;
    int second = 0;
    Period period = Period::FirstHalf;
    long long team_id = 0;
    long long player_id = 0;
    EventType type = EventType::Pass;
    Outcome outcome = Outcome::Successful;

    double time_minutes() const { return minute + second / 60.0; }
};

// Category partition of Table-shape vocabulary plus the composite event
// definitions (unions of base types). ChainEvents is windowed, not a union,
// and is handled by derive_chain_events.
class Taxonomy {
  public:
    static const Taxonomy& standard();

    EventCategory category(EventType t) const;
    // nullptr when `name` is not a composite.
    const std::vector<EventType>* composite(std::string_view name) const;
    const std::map<std::string, std::vector<EventType>, std::less<>>& composites() const {
        return composites_;
    }

  private:
    Taxonomy();
    std::map<std::string, std::vector<EventType>, std::less<>> composites_;
};

inline constexpr std::string_view kChainEventsName = "ChainEvents";

struct FixtureMeta {
    long long fixture_id = 0;
    long long home_team_id = 0;
    long long away_team_id = 0;
    std::string date;
    std::string block_label;  // optional column
};

struct PlayerAppearance {
    long long fixture_id = 0;
    long long player_id = 0;
    long long team_id = 0;
    double minutes_played = 0.0;
};

// min(minutes / 90, 1); negative minutes is a DomainError.
double compute_tau(double minutes_played);

struct FixtureEvents {
    long long fixture_id = 0;
    std::vector<RawTouchEvent> events;  // file order, time-ordered within period
};

struct TouchLog {
    std::vector<FixtureMeta> fixtures;
    std::vector<FixtureEvents> per_fixture;  // in first-seen order

    const FixtureMeta& meta(long long fixture_id) const;
};

std::vector<FixtureMeta> read_fixture_meta(const std::string& path);

// Columns: fixture_id,minute,second,period,team_id,player_id,type,outcome.
// Every fixture referenced by the log must exist in `meta`.
TouchLog parse_touch_log(const std::string& events_path, const std::string& fixtures_path);

// Drops Stop-category events and OffsideGiven; order preserved.
std::vector<RawTouchEvent> filter_events(const std::vector<RawTouchEvent>& events,
                                         const Taxonomy& taxonomy = Taxonomy::standard());

// For each Shots-member event, credits every appearance of a player in the
// last `window` Successful events by the shooting team strictly before the
// shot (multiplicity counted). Input must be time-ordered within the fixture.
std::map<long long, long long> derive_chain_events(const std::vector<RawTouchEvent>& events,
                                                   int window = 5);

struct CountRow {
    long long fixture_id = 0;
    long long player_id = 0;
    long long team_id = 0;
    bool home = false;
    double tau = 0.0;
    std::vector<long long> counts;  // parallel to FixtureCountTable::columns
};

struct FixtureCountTable {
    std::vector<std::string> columns;  // lexicographic
    std::vector<CountRow> rows;

    int column_index(std::string_view name) const;  // -1 when absent
    long long count(const CountRow& row, std::string_view name) const;
};

// One count row per appearance; `columns` may mix base types and composites
// (ChainEvents included). Events by players without an appearance record are
// a ReferentialError.
FixtureCountTable aggregate_counts(const TouchLog& log,
                                   const std::vector<PlayerAppearance>& appearances,
                                   const std::vector<std::string>& columns,
                                   const Taxonomy& taxonomy = Taxonomy::standard());

std::vector<PlayerAppearance> read_appearances(const std::string& path);

// Minutes from the raw log when no appearances file is supplied: a player is
// on the pitch from their SubstitutionOn (else kickoff) to their
// SubstitutionOff (else full time).
std::vector<PlayerAppearance> derive_appearances(const TouchLog& log);

// First 11 distinct player ids per team before that team's first
// SubstitutionOn. .first = home XI, .second = away XI.
std::pair<std::vector<long long>, std::vector<long long>> starting_elevens(
    const FixtureEvents& fixture, const FixtureMeta& meta);

void write_counts_csv(const FixtureCountTable& table, const std::string& path);
FixtureCountTable read_counts_csv(const std::string& path);

}  // namespace pitchvi
