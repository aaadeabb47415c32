#include "pitchvi/events.hpp"

#include <algorithm>
#include <array>
#include <deque>

#include "pitchvi/csv.hpp"

namespace pitchvi {

namespace {

struct EventInfo {
    const char* name;
    EventCategory cat;
};

// Alphabetical, matching the EventType enumerator order.
constexpr std::array<EventInfo, kNumEventTypes> kEventInfo = {{
    {"Aerial", EventCategory::Control},
    {"BallRecovery", EventCategory::Control},
    {"BallTouch", EventCategory::Control},
    {"BlockedPass", EventCategory::Disruption},
    {"Card", EventCategory::Stop},
    {"Challenge", EventCategory::Disruption},
    {"ChanceMissed", EventCategory::Control},
    {"Claim", EventCategory::Disruption},
    {"Clearance", EventCategory::Disruption},
    {"CornerAwarded", EventCategory::Miscellanea},
    {"CrossNotClaimed", EventCategory::Miscellanea},
    {"Dispossessed", EventCategory::Control},
    {"End", EventCategory::Stop},
    {"Error", EventCategory::Control},
    {"FormationChange", EventCategory::Stop},
    {"FormationSet", EventCategory::Stop},
    {"Foul", EventCategory::Control},
    {"Goal", EventCategory::Control},
    {"GoodSkill", EventCategory::Control},
    {"Interception", EventCategory::Disruption},
    {"KeeperPickup", EventCategory::Disruption},
    {"KeeperSweeper", EventCategory::Miscellanea},
    {"MissedShots", EventCategory::Control},
    {"OffsideGiven", EventCategory::Stop},
    {"OffsidePass", EventCategory::Control},
    {"OffsideProvoked", EventCategory::Disruption},
    {"Pass", EventCategory::Control},
    {"PenaltyFaced", EventCategory::Stop},
    {"Punch", EventCategory::Disruption},
    {"Save", EventCategory::Disruption},
    {"SavedShot", EventCategory::Control},
    {"ShieldBallOpp", EventCategory::Miscellanea},
    {"ShotOnPost", EventCategory::Control},
    {"Smother", EventCategory::Disruption},
    {"Start", EventCategory::Stop},
    {"SubstitutionOff", EventCategory::Stop},
    {"SubstitutionOn", EventCategory::Stop},
    {"Tackle", EventCategory::Disruption},
    {"TakeOn", EventCategory::Control},
}};

std::vector<EventType> parse_list(std::initializer_list<const char*> names) {
    std::vector<EventType> out;
    for (const char* n : names) out.push_back(parse_event_type(n));
    return out;
}

}  // namespace

const char* to_string(EventType t) { return kEventInfo[static_cast<size_t>(t)].name; }

std::optional<EventType> try_parse_event_type(std::string_view name) {
    // Binary search over the alphabetical table.
    int lo = 0, hi = kNumEventTypes - 1;
    while (lo <= hi) {
        int mid = (lo + hi) / 2;
        int c = name.compare(kEventInfo[mid].name);
        if (c == 0) return static_cast<EventType>(mid);
        if (c < 0)
            hi = mid - 1;
        else
            lo = mid + 1;
    }
    return std::nullopt;
}

EventType parse_event_type(std::string_view name) {
    if (auto t = try_parse_event_type(name)) return *t;
    throw VocabularyError("unknown event type '" + std::string(name) + "'");
}

EventCategory category(EventType t) { return kEventInfo[static_cast<size_t>(t)].cat; }

Taxonomy::Taxonomy() {
    composites_["GoalStop"] = parse_list({"BallRecovery", "Challenge", "Claim", "Error",
                                          "Interception", "KeeperPickup", "Punch", "Save",
                                          "Smother", "Tackle"});
    composites_["Shots"] = parse_list({"Goal", "MissedShots", "SavedShot", "ShotOnPost"});
    composites_["ShotStop"] = parse_list({"Challenge", "Claim", "Interception", "KeeperPickup",
                                          "Punch", "Save", "Smother", "Tackle"});
    composites_["AntiPass"] =
        parse_list({"BallRecovery", "BlockedPass", "Claim", "Clearance", "CornerAwarded",
                    "CrossNotClaimed", "Interception", "KeeperPickup", "OffsideProvoked", "Punch",
                    "Smother", "Tackle"});
    std::vector<EventType> control, disruption;
    for (int i = 0; i < kNumEventTypes; ++i) {
        auto t = static_cast<EventType>(i);
        if (pitchvi::category(t) == EventCategory::Control) control.push_back(t);
        if (pitchvi::category(t) == EventCategory::Disruption) disruption.push_back(t);
    }
    composites_["Control"] = std::move(control);
    composites_["Disruption"] = std::move(disruption);
}

const Taxonomy& Taxonomy::standard() {
    static const Taxonomy tax;
    return tax;
}

EventCategory Taxonomy::category(EventType t) const { return pitchvi::category(t); }

const std::vector<EventType>* Taxonomy::composite(std::string_view name) const {
    auto it = composites_.find(name);
    return it == composites_.end() ? nullptr : &it->second;
}

double compute_tau(double minutes_played) {
    if (minutes_played < 0) throw DomainError("negative minutes played");
    return std::min(minutes_played / 90.0, 1.0);
}

const FixtureMeta& TouchLog::meta(long long fixture_id) const {
    for (const auto& m : fixtures)
        if (m.fixture_id == fixture_id) return m;
    throw ReferentialError("fixture " + std::to_string(fixture_id) + " not in fixture meta");
}

std::vector<FixtureMeta> read_fixture_meta(const std::string& path) {
    csv::Reader r(path);
    int c_fix = r.column("fixture_id");
    int c_home = r.column("home_team_id");
    int c_away = r.column("away_team_id");
    int c_date = r.column("date");
    int c_block = r.column_or("block_label", -1);
    std::vector<FixtureMeta> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        FixtureMeta m;
        m.fixture_id = csv::to_ll(f[c_fix], "fixture_id", r.line_no());
        m.home_team_id = csv::to_ll(f[c_home], "home_team_id", r.line_no());
        m.away_team_id = csv::to_ll(f[c_away], "away_team_id", r.line_no());
        m.date = f[c_date];
        if (c_block >= 0) m.block_label = f[c_block];
        out.push_back(std::move(m));
    }
    return out;
}

TouchLog parse_touch_log(const std::string& events_path, const std::string& fixtures_path) {
    TouchLog log;
    log.fixtures = read_fixture_meta(fixtures_path);
    std::unordered_map<long long, size_t> fixture_slot;
    for (const auto& m : log.fixtures) fixture_slot.emplace(m.fixture_id, SIZE_MAX);

    csv::Reader r(events_path);
    int c_fix = r.column("fixture_id");
    int c_min = r.column("minute");
    int c_sec = r.column("second");
    int c_per = r.column("period");
    int c_team = r.column("team_id");
    int c_player = r.column("player_id");
    int c_type = r.column("type");
    int c_out = r.column("outcome");

    std::vector<std::string> f;
    while (r.next(f)) {
        long long fix = csv::to_ll(f[c_fix], "fixture_id", r.line_no());
        auto it = fixture_slot.find(fix);
        if (it == fixture_slot.end())
            throw ReferentialError("fixture " + std::to_string(fix) +
                                   " in event log but not in fixture file (line " +
                                   std::to_string(r.line_no()) + ")");
        RawTouchEvent ev;
        ev.minute = static_cast<int>(csv::to_ll(f[c_min], "minute", r.line_no()));
        ev.second = static_cast<int>(csv::to_ll(f[c_sec], "second", r.line_no()));
        if (ev.minute < 0 || ev.second < 0 || ev.second > 59)
            throw ParseError("time out of range", r.line_no());
        if (f[c_per] == "FirstHalf")
            ev.period = Period::FirstHalf;
        else if (f[c_per] == "SecondHalf")
            ev.period = Period::SecondHalf;
        else
            throw ParseError("bad period '" + f[c_per] + "'", r.line_no());
        ev.team_id = csv::to_ll(f[c_team], "team_id", r.line_no());
        ev.player_id = csv::to_ll(f[c_player], "player_id", r.line_no());
        ev.type = parse_event_type(f[c_type]);
        if (f[c_out] == "Successful")
            ev.outcome = Outcome::Successful;
        else if (f[c_out] == "Unsuccessful")
            ev.outcome = Outcome::Unsuccessful;
        else
            throw ParseError("bad outcome '" + f[c_out] + "'", r.line_no());

        if (it->second == SIZE_MAX) {
            it->second = log.per_fixture.size();
            log.per_fixture.push_back({fix, {}});
        }
        log.per_fixture[it->second].events.push_back(ev);
    }
    return log;
}

std::vector<RawTouchEvent> filter_events(const std::vector<RawTouchEvent>& events,
                                         const Taxonomy& taxonomy) {
    std::vector<RawTouchEvent> out;
    out.reserve(events.size());
    for (const auto& ev : events) {
        if (taxonomy.category(ev.type) == EventCategory::Stop) continue;
        out.push_back(ev);
    }
    return out;
}

std::map<long long, long long> derive_chain_events(const std::vector<RawTouchEvent>& events,
                                                   int window) {
    if (window < 1) throw DomainError("chain window must be >= 1");
    const auto* shots = Taxonomy::standard().composite("Shots");
    std::map<long long, long long> involvement;
    // Per-team rolling window of players in the last `window` Successful
    // events. The shot itself is credited before it enters the window.
    std::map<long long, std::deque<long long>> recent;
    for (const auto& ev : events) {
        bool is_shot = std::find(shots->begin(), shots->end(), ev.type) != shots->end();
        if (is_shot) {
            for (long long p : recent[ev.team_id]) ++involvement[p];
        }
        if (ev.outcome == Outcome::Successful) {
            auto& dq = recent[ev.team_id];
            dq.push_back(ev.player_id);
            if (static_cast<int>(dq.size()) > window) dq.pop_front();
        }
    }
    return involvement;
}

int FixtureCountTable::column_index(std::string_view name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

long long FixtureCountTable::count(const CountRow& row, std::string_view name) const {
    int idx = column_index(name);
    if (idx < 0) throw ReferentialError("no count column '" + std::string(name) + "'");
    return row.counts[idx];
}

FixtureCountTable aggregate_counts(const TouchLog& log,
                                   const std::vector<PlayerAppearance>& appearances,
                                   const std::vector<std::string>& columns,
                                   const Taxonomy& taxonomy) {
    FixtureCountTable table;
    table.columns = columns;
    std::sort(table.columns.begin(), table.columns.end());
    table.columns.erase(std::unique(table.columns.begin(), table.columns.end()),
                        table.columns.end());

    // Validate column names up front.
    bool want_chain = false;
    for (const auto& c : table.columns) {
        if (c == kChainEventsName) {
            want_chain = true;
        } else if (!taxonomy.composite(c) && !try_parse_event_type(c)) {
            throw VocabularyError("unknown count column '" + c + "'");
        }
    }

    std::map<std::pair<long long, long long>, size_t> row_of;  // (fixture, player)
    for (const auto& app : appearances) {
        auto key = std::make_pair(app.fixture_id, app.player_id);
        if (row_of.count(key))
            throw DataError("duplicate appearance for fixture " + std::to_string(app.fixture_id) +
                            " player " + std::to_string(app.player_id));
        const auto& meta = log.meta(app.fixture_id);
        CountRow row;
        row.fixture_id = app.fixture_id;
        row.player_id = app.player_id;
        row.team_id = app.team_id;
        if (app.team_id != meta.home_team_id && app.team_id != meta.away_team_id)
            throw ReferentialError("team " + std::to_string(app.team_id) +
                                   " not part of fixture " + std::to_string(app.fixture_id));
        row.home = (app.team_id == meta.home_team_id);
        row.tau = compute_tau(app.minutes_played);
        row.counts.assign(table.columns.size(), 0);
        row_of.emplace(key, table.rows.size());
        table.rows.push_back(std::move(row));
    }

    for (const auto& fx : log.per_fixture) {
        auto filtered = filter_events(fx.events, taxonomy);
        for (const auto& ev : filtered) {
            auto it = row_of.find({fx.fixture_id, ev.player_id});
            if (it == row_of.end())
                throw ReferentialError("event by player " + std::to_string(ev.player_id) +
                                       " in fixture " + std::to_string(fx.fixture_id) +
                                       " has no appearance record");
            CountRow& row = table.rows[it->second];
            for (size_t c = 0; c < table.columns.size(); ++c) {
                const std::string& name = table.columns[c];
                if (name == kChainEventsName) continue;
                if (const auto* members = taxonomy.composite(name)) {
                    if (std::find(members->begin(), members->end(), ev.type) != members->end())
                        ++row.counts[c];
                } else if (*try_parse_event_type(name) == ev.type) {
                    ++row.counts[c];
                }
            }
        }
        if (want_chain) {
            int chain_col = table.column_index(kChainEventsName);
            for (const auto& [player, n] : derive_chain_events(filtered)) {
                auto it = row_of.find({fx.fixture_id, player});
                if (it == row_of.end())
                    throw ReferentialError("chain event by player " + std::to_string(player) +
                                           " in fixture " + std::to_string(fx.fixture_id) +
                                           " has no appearance record");
                table.rows[it->second].counts[chain_col] += n;
            }
        }
    }
    return table;
}

std::vector<PlayerAppearance> read_appearances(const std::string& path) {
    csv::Reader r(path);
    int c_fix = r.column("fixture_id");
    int c_player = r.column("player_id");
    int c_team = r.column("team_id");
    int c_min = r.column("minutes_played");
    std::vector<PlayerAppearance> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        PlayerAppearance a;
        a.fixture_id = csv::to_ll(f[c_fix], "fixture_id", r.line_no());
        a.player_id = csv::to_ll(f[c_player], "player_id", r.line_no());
        a.team_id = csv::to_ll(f[c_team], "team_id", r.line_no());
        a.minutes_played = csv::to_double(f[c_min], "minutes_played", r.line_no());
        out.push_back(a);
    }
    return out;
}

std::vector<PlayerAppearance> derive_appearances(const TouchLog& log) {
    std::vector<PlayerAppearance> out;
    for (const auto& fx : log.per_fixture) {
        struct Span {
            long long team = 0;
            double on = 0.0, off = 90.0;
            bool subbed_on = false;
        };
        std::map<long long, Span> spans;
        for (const auto& ev : fx.events) {
            double t = ev.time_minutes() + (ev.period == Period::SecondHalf ? 45.0 : 0.0);
            auto& sp = spans[ev.player_id];
            sp.team = ev.team_id;
            if (ev.type == EventType::SubstitutionOn) {
                sp.on = t;
                sp.subbed_on = true;
            } else if (ev.type == EventType::SubstitutionOff) {
                sp.off = t;
            }
        }
        for (const auto& [player, sp] : spans) {
            PlayerAppearance a;
            a.fixture_id = fx.fixture_id;
            a.player_id = player;
            a.team_id = sp.team;
            a.minutes_played = std::clamp(sp.off - sp.on, 0.0, 90.0);
            out.push_back(a);
        }
    }
    return out;
}

std::pair<std::vector<long long>, std::vector<long long>> starting_elevens(
    const FixtureEvents& fixture, const FixtureMeta& meta) {
    std::pair<std::vector<long long>, std::vector<long long>> xi;
    std::map<long long, bool> closed;  // team -> saw SubstitutionOn
    for (const auto& ev : fixture.events) {
        auto& team_xi = (ev.team_id == meta.home_team_id) ? xi.first : xi.second;
        if (ev.type == EventType::SubstitutionOn) closed[ev.team_id] = true;
        if (closed[ev.team_id]) continue;
        if (std::find(team_xi.begin(), team_xi.end(), ev.player_id) == team_xi.end() &&
            team_xi.size() < 11)
            team_xi.push_back(ev.player_id);
    }
    return xi;
}

void write_counts_csv(const FixtureCountTable& table, const std::string& path) {
    csv::Writer w(path);
    std::vector<std::string> row = {"fixture_id", "player_id", "team_id", "home", "tau"};
    for (const auto& c : table.columns) row.push_back(c);
    w.row(row);
    for (const auto& r : table.rows) {
        row = {std::to_string(r.fixture_id), std::to_string(r.player_id),
               std::to_string(r.team_id), r.home ? "1" : "0", csv::fmt(r.tau)};
        for (long long c : r.counts) row.push_back(std::to_string(c));
        w.row(row);
    }
}

FixtureCountTable read_counts_csv(const std::string& path) {
    csv::Reader r(path);
    FixtureCountTable table;
    const auto& hdr = r.header();
    if (hdr.size() < 5 || hdr[0] != "fixture_id" || hdr[1] != "player_id" ||
        hdr[2] != "team_id" || hdr[3] != "home" || hdr[4] != "tau")
        throw ParseError(path + ": unexpected counts header", 1);
    table.columns.assign(hdr.begin() + 5, hdr.end());
    std::vector<std::string> f;
    while (r.next(f)) {
        CountRow row;
        row.fixture_id = csv::to_ll(f[0], "fixture_id", r.line_no());
        row.player_id = csv::to_ll(f[1], "player_id", r.line_no());
        row.team_id = csv::to_ll(f[2], "team_id", r.line_no());
        row.home = f[3] == "1";
        row.tau = csv::to_double(f[4], "tau", r.line_no());
        for (size_t i = 5; i < f.size(); ++i)
            row.counts.push_back(csv::to_ll(f[i], table.columns[i - 5], r.line_no()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace pitchvi
