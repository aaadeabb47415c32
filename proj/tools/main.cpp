#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pitchvi/analytics.hpp"
#include "pitchvi/csv.hpp"
#include "pitchvi/events.hpp"
#include "pitchvi/hier.hpp"
#include "pitchvi/synth.hpp"
#include "pitchvi/vi.hpp"

namespace fs = std::filesystem;
using namespace pitchvi;

namespace {

// Flat key-value configuration with [section] headers; keys addressed as
// "section.key".
class Config {
  public:
    explicit Config(const std::string& path) : path_(path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config file: " + path);
        std::ostringstream raw;
        raw << in.rdbuf();
        raw_ = raw.str();

        std::istringstream lines(raw_);
        std::string line, section;
        long line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            std::string s = csv::strip(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[' && s.back() == ']') {
                section = csv::strip(s.substr(1, s.size() - 2));
                continue;
            }
            size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ParseError(path + ": expected key = value", line_no);
            std::string key = csv::strip(s.substr(0, eq));
            values_[section + "." + key] = csv::strip(s.substr(eq + 1));
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw ValidationError("config " + path_ + " is missing key '" + key + "'");
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? csv::to_ll(get(key), key, 0) : fallback;
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? csv::to_double(get(key), key, 0) : fallback;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        std::string v = get(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ValidationError("config key '" + key + "' must be a boolean, got '" + v + "'");
    }

    const std::string& raw() const { return raw_; }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::string raw_;
    std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& data) {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", h);
    return buf;
}

struct Run {
    std::string command;
    const Config* config = nullptr;
    fs::path out;
    std::uint64_t seed = 0;
    bool force = false;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::vector<std::string> artifacts;

    std::string path(const std::string& name) {
        fs::path p = out / name;
        if (fs::exists(p) && !force)
            throw ValidationError("output file exists (use --force to overwrite): " +
                                  p.string());
        artifacts.push_back(name);
        return p.string();
    }

    void manifest() {
        auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config"] = config->path();
        j["config_hash"] = fnv1a_hex(config->raw());
        j["seed"] = seed;
        j["version"] = "1.0.0";
        j["wall_ms"] = wall;
        j["artifacts"] = artifacts;
        if (const char* threads = std::getenv("ABILITY_VI_THREADS")) j["threads"] = threads;
        std::ofstream o(out / (command + ".manifest.json"));
        o << j.dump(2) << '\n';
    }
};

EventPair pair_from(const Config& cfg, const std::string& flag_pair) {
    std::string spec = flag_pair.empty() ? cfg.get_or("model.pair", "Goal,GoalStop") : flag_pair;
    auto parts = csv::split(spec);
    if (parts.size() != 2)
        throw ValidationError("event pair must be two comma-separated names, got '" + spec +
                              "'");
    EventPair p{csv::strip(parts[0]), csv::strip(parts[1])};
    if (p.e1 == p.e2) throw ValidationError("event pair names must differ");
    return p;
}

std::vector<PlayerAppearance> load_appearances(const Config& cfg, const TouchLog& log) {
    if (cfg.has("paths.appearances")) return read_appearances(cfg.get("paths.appearances"));
    return derive_appearances(log);
}

OptimizerConfig optimizer_config(const Config& cfg, std::uint64_t seed) {
    OptimizerConfig oc;
    oc.max_iters = static_cast<int>(cfg.get_int("optimizer.max_iters", oc.max_iters));
    oc.step = cfg.get_double("optimizer.step", oc.step);
    oc.psi_frozen = cfg.get_bool("optimizer.psi_frozen", oc.psi_frozen);
    oc.convergence_window =
        static_cast<int>(cfg.get_int("optimizer.convergence_window", oc.convergence_window));
    oc.convergence_tol = cfg.get_double("optimizer.convergence_tol", oc.convergence_tol);
    oc.early_stop = cfg.get_bool("optimizer.early_stop", oc.early_stop);
    oc.seed = seed;
    return oc;
}

McmcConfig mcmc_config(const Config& cfg, std::uint64_t seed) {
    McmcConfig mc;
    mc.n_draws = static_cast<int>(cfg.get_int("mcmc.n_draws", mc.n_draws));
    mc.warmup = static_cast<int>(cfg.get_int("mcmc.warmup", mc.warmup));
    mc.thin = static_cast<int>(cfg.get_int("mcmc.thin", mc.thin));
    mc.n_chains = static_cast<int>(cfg.get_int("mcmc.n_chains", mc.n_chains));
    mc.seed = seed;
    return mc;
}

PriorSpec prior_spec(const Config& cfg) {
    PriorSpec p;
    p.m = cfg.get_double("model.prior_mean", p.m);
    p.s = cfg.get_double("model.prior_sd", p.s);
    if (!(p.s > 0.0)) throw ValidationError("model.prior_sd must be positive");
    return p;
}

// Ability features shared by fit-goals and predict in extended mode.
struct FeatureSetup {
    std::vector<VariationalState> states;
    AbilityLookup lookup;
    FDeltaMode mode = FDeltaMode::SinglePair;
    EventPair pair;
};

FeatureSetup feature_setup(const Config& cfg, const std::string& flag_pair) {
    FeatureSetup fsu;
    fsu.pair = pair_from(cfg, flag_pair);
    std::string mode = cfg.get_or("goals.mode", "single");
    if (mode == "multi")
        fsu.mode = FDeltaMode::Multi;
    else if (mode != "single")
        throw ValidationError("goals.mode must be 'single' or 'multi'");
    for (const auto& p : csv::split(cfg.get("goals.ability_posteriors"), ';'))
        fsu.states.push_back(load_posterior_json(csv::strip(p)).first);
    if (fsu.states.empty()) throw ValidationError("goals.ability_posteriors is empty");
    fsu.lookup = ability_lookup_from_states(fsu.states);
    return fsu;
}

BlockSchedule schedule_from(const Config& cfg, const std::vector<MatchResult>& results) {
    size_t season1 = static_cast<size_t>(cfg.get_int("goals.season1_size", 380));
    if (season1 == 0 || season1 >= results.size())
        throw ValidationError("goals.season1_size must split the results into two seasons");
    std::vector<long long> s1, s2;
    for (size_t i = 0; i < results.size(); ++i)
        (i < season1 ? s1 : s2).push_back(results[i].fixture_id);
    return make_block_schedule(s1, s2);
}

void write_predictions(const std::string& path, const std::string& model,
                       const std::vector<BlockPrediction>& preds) {
    csv::Writer w(path);
    w.row({"fixture_id", "block", "model", "p_over", "actual_over"});
    for (const auto& p : preds)
        w.row({std::to_string(p.fixture_id), std::to_string(p.block), model,
               csv::fmt(p.p_over), p.actual_over ? "1" : "0"});
}

int cmd_ingest(Run& run) {
    const Config& cfg = *run.config;
    TouchLog log = parse_touch_log(cfg.get("paths.events"), cfg.get("paths.fixtures"));
    auto appearances = load_appearances(cfg, log);
    std::vector<std::string> columns;
    for (const auto& c : csv::split(cfg.get_or("ingest.columns", "Goal,GoalStop")))
        columns.push_back(csv::strip(c));
    auto counts = aggregate_counts(log, appearances, columns);
    write_counts_csv(counts, run.path("counts.csv"));
    write_results_csv(extract_match_results(log), run.path("results.csv"));
    return 0;
}

int cmd_fit_ability(Run& run, const std::string& flag_pair) {
    const Config& cfg = *run.config;
    auto counts = read_counts_csv(cfg.get("paths.counts"));
    auto pair = pair_from(cfg, flag_pair);
    auto data = ModelData::build(counts, pair);
    auto [state, trace] = fit(data, prior_spec(cfg), optimizer_config(cfg, run.seed));
    save_posterior_json(state, trace, run.path("posterior.json"));
    {
        csv::Writer w(run.path("elbo_trace.csv"));
        w.row({"iter", "elbo"});
        for (const auto& pt : trace.points)
            w.row({std::to_string(pt.iter), csv::fmt(pt.elbo)});
    }
    return 0;
}

int cmd_rank(Run& run, int top_n) {
    const Config& cfg = *run.config;
    auto [state, trace] = load_posterior_json(cfg.get("paths.posterior"));
    auto counts = read_counts_csv(cfg.get("paths.counts"));
    std::string event = cfg.get_or("rank.event", state.events[0]);
    if (top_n <= 0) top_n = static_cast<int>(cfg.get_int("rank.top_n", 10));
    auto ranking = rank_players(state, event, counts, top_n);
    write_ranking_csv(ranking, run.path("ranking.csv"));
    return 0;
}

int cmd_simulate(Run& run) {
    const Config& cfg = *run.config;
    auto [state, trace] = load_posterior_json(cfg.get("paths.posterior"));
    auto counts = read_counts_csv(cfg.get("paths.counts"));
    EventPair pair{state.events[0], state.events[1]};
    auto data = ModelData::build(counts, pair);
    int n_draws = static_cast<int>(cfg.get_int("simulate.n_draws", 10000));

    std::vector<long long> teams;
    for (const auto& fx : data.fixtures)
        for (long long t : fx.team_id)
            if (std::find(teams.begin(), teams.end(), t) == teams.end()) teams.push_back(t);
    std::sort(teams.begin(), teams.end());

    csv::Writer w(run.path("team_totals.csv"));
    w.row({"team_id", "event", "source", "min", "q1", "median", "q3", "max"});
    auto emit = [&](long long team, const std::string& event, const std::string& source,
                    const BoxStats& b) {
        w.row({std::to_string(team), event, source, csv::fmt(b.min), csv::fmt(b.q1),
               csv::fmt(b.median), csv::fmt(b.q3), csv::fmt(b.max)});
    };
    for (long long team : teams) {
        for (int e = 0; e < 2; ++e) {
            emit(team, state.events[e], "observed", box_stats(observed_team_totals(data, team, e)));
            emit(team, state.events[e], "simulated",
                 box_stats(simulated_team_totals(data, state, team, e, n_draws, run.seed)));
        }
    }
    return 0;
}

int cmd_fit_goals(Run& run, const std::string& model, const std::string& flag_pair) {
    const Config& cfg = *run.config;
    auto results = read_results_csv(cfg.get("paths.results"));
    std::vector<AbilityFeatures> features(results.size());
    if (model == "extended") {
        auto fsu = feature_setup(cfg, flag_pair);
        for (size_t i = 0; i < results.size(); ++i)
            features[i] = f_delta(results[i], fsu.lookup, fsu.mode, fsu.pair);
    }
    auto posterior = mcmc_fit(results, &features, mcmc_config(cfg, run.seed));
    save_draws_json(posterior, run.path("draws.json"));
    {
        csv::Writer w(run.path("diagnostics.csv"));
        w.row({"parameter", "ess", "rhat"});
        for (const auto& [name, ess] : posterior.diagnostics.ess)
            w.row({name, csv::fmt(ess), csv::fmt(posterior.diagnostics.rhat.at(name))});
    }
    std::cerr << "acceptance rate " << posterior.diagnostics.acceptance_rate << "\n";
    return 0;
}

int cmd_predict(Run& run, const std::string& model, int block, const std::string& flag_pair) {
    const Config& cfg = *run.config;
    auto results = read_results_csv(cfg.get("paths.results"));
    auto schedule = schedule_from(cfg, results);

    std::function<AbilityFeatures(int, const MatchResult&)> features_for;
    HierModel hm = HierModel::Baseline;
    if (model == "extended") {
        hm = HierModel::Extended;
        auto fsu = feature_setup(cfg, flag_pair);
        auto lookup = fsu.lookup;
        auto mode = fsu.mode;
        auto pair = fsu.pair;
        features_for = [lookup, mode, pair](int, const MatchResult& m) {
            return f_delta(m, lookup, mode, pair);
        };
    }
    std::vector<long long> excluded;
    auto preds = run_block_experiment(results, schedule, hm, mcmc_config(cfg, run.seed),
                                      features_for, &excluded);
    if (block >= 0) {
        std::erase_if(preds, [block](const BlockPrediction& p) { return p.block != block; });
        if (preds.empty())
            throw ValidationError("block " + std::to_string(block) +
                                  " has no predictions in this schedule");
    }
    write_predictions(run.path("predictions.csv"), model, preds);
    {
        csv::Writer w(run.path("excluded.csv"));
        w.row({"fixture_id"});
        for (long long id : excluded) w.row({std::to_string(id)});
    }
    return 0;
}

int cmd_evaluate(Run& run) {
    const Config& cfg = *run.config;
    csv::Reader r(cfg.get("paths.predictions"));
    int c_fix = r.column("fixture_id");
    int c_block = r.column("block");
    int c_model = r.column("model");
    int c_p = r.column("p_over");
    int c_actual = r.column("actual_over");
    (void)c_fix;
    struct Row {
        int block;
        std::string model;
        double p;
        bool label;
    };
    std::vector<Row> rows;
    std::vector<std::string> f;
    while (r.next(f)) {
        rows.push_back({static_cast<int>(csv::to_ll(f[c_block], "block", r.line_no())),
                        f[c_model], csv::to_double(f[c_p], "p_over", r.line_no()),
                        f[c_actual] == "1"});
    }
    if (rows.empty()) throw ValidationError("predictions file has no rows");

    std::map<std::pair<std::string, int>, std::vector<std::pair<double, bool>>> groups;
    std::map<std::string, std::vector<std::pair<double, bool>>> overall;
    for (const auto& row : rows) {
        groups[{row.model, row.block}].push_back({row.p, row.label});
        overall[row.model].push_back({row.p, row.label});
    }

    csv::Writer auc_w(run.path("auc.csv"));
    auc_w.row({"model", "block", "auc"});
    csv::Writer roc_w(run.path("roc.csv"));
    roc_w.row({"model", "block", "fpr", "tpr", "threshold"});
    auto emit = [&](const std::string& model, const std::string& block,
                    const std::vector<std::pair<double, bool>>& scores) {
        auto roc = roc_auc(scores);
        auc_w.row({model, block, csv::fmt(roc.auc)});
        for (const auto& pt : roc.points)
            roc_w.row({model, block, csv::fmt(pt.fpr), csv::fmt(pt.tpr),
                       csv::fmt(pt.threshold)});
    };
    for (const auto& [key, scores] : groups) emit(key.first, std::to_string(key.second), scores);
    for (const auto& [model, scores] : overall) emit(model, "all", scores);
    return 0;
}

int cmd_synth(Run& run) {
    const Config& cfg = *run.config;
    std::string kind = cfg.get_or("synth.kind", "counts");
    if (kind == "counts") {
        CountSynthConfig sc;
        sc.n_teams = static_cast<int>(cfg.get_int("synth.n_teams", sc.n_teams));
        sc.regulars_per_team =
            static_cast<int>(cfg.get_int("synth.regulars_per_team", sc.regulars_per_team));
        sc.fringe_per_team =
            static_cast<int>(cfg.get_int("synth.fringe_per_team", sc.fringe_per_team));
        sc.delta_mean = cfg.get_double("synth.delta_mean", sc.delta_mean);
        sc.delta_sd = cfg.get_double("synth.delta_sd", sc.delta_sd);
        sc.pair = pair_from(cfg, "");
        for (int e = 0; e < 2; ++e) {
            std::string k = "synth.gamma" + std::to_string(e + 1);
            sc.psi.ev[e].gamma = cfg.get_double(k, sc.psi.ev[e].gamma);
        }
        sc.seed = run.seed;
        auto season = generate_count_season(sc);
        write_season_files(season, run.path("events.csv"), run.path("fixtures.csv"),
                           run.path("appearances.csv"));
        write_counts_csv(season.counts, run.path("counts.csv"));
        nlohmann::ordered_json truth;
        for (const auto& [key, v] : season.truth.delta)
            truth["delta"][std::to_string(key.first)]
                 [key.second == 0 ? season.pair.e1 : season.pair.e2] = v;
        for (int e = 0; e < 2; ++e) {
            const std::string& name = e == 0 ? season.pair.e1 : season.pair.e2;
            truth["psi"][name] = {{"lambda1", season.psi.ev[e].lambda1},
                                  {"lambda2", season.psi.ev[e].lambda2},
                                  {"gamma", season.psi.ev[e].gamma}};
        }
        std::ofstream o(run.path("truth.json"));
        o << truth.dump(2) << '\n';
    } else if (kind == "scores") {
        ScoreSynthConfig sc;
        sc.n_teams = static_cast<int>(cfg.get_int("synth.n_teams", sc.n_teams));
        sc.churn = static_cast<int>(cfg.get_int("synth.churn", sc.churn));
        sc.home = cfg.get_double("synth.home", sc.home);
        sc.att_sd = cfg.get_double("synth.att_sd", sc.att_sd);
        sc.def_sd = cfg.get_double("synth.def_sd", sc.def_sd);
        sc.feature_scale = cfg.get_double("synth.feature_scale", sc.feature_scale);
        sc.seed = run.seed;
        auto scores = generate_two_season_scores(sc);
        write_results_csv(scores.all_matches(), run.path("results.csv"));
        {
            csv::Writer w(run.path("features.csv"));
            w.row({"fixture_id", "f_h", "f_a"});
            for (const auto& m : scores.all_matches()) {
                const auto& f = scores.features.at(m.fixture_id);
                w.row({std::to_string(m.fixture_id), csv::fmt(f.f_h), csv::fmt(f.f_a)});
            }
        }
        nlohmann::ordered_json truth;
        truth["home"] = scores.home;
        for (const auto& [t, v] : scores.att) truth["att"][std::to_string(t)] = v;
        for (const auto& [t, v] : scores.def) truth["def"][std::to_string(t)] = v;
        truth["promoted"] = scores.promoted;
        truth["season1_size"] = scores.season1.size();
        std::ofstream o(run.path("truth.json"));
        o << truth.dump(2) << '\n';
    } else {
        throw ValidationError("synth.kind must be 'counts' or 'scores'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Player-ability inference and goal-model prediction pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", model = "baseline", event_pair;
    long long seed = -1;
    int block = -1, top_n = 0;
    bool force = false;

    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--block", block, "restrict to one prediction block");
    app.add_option("--model", model, "goal model variant")
        ->check(CLI::IsMember({"baseline", "extended"}));
    app.add_option("--event-pair", event_pair, "interacting event pair NAME,NAME");
    app.add_option("--top-n", top_n, "ranking size");
    app.add_flag("--force", force, "overwrite existing outputs");

    for (const char* name : {"ingest", "fit-ability", "rank", "simulate", "fit-goals",
                             "predict", "evaluate", "synth"})
        app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);
    std::string cmd = app.get_subcommands().front()->get_name();

    try {
        if (const char* threads = std::getenv("ABILITY_VI_THREADS")) {
            long long t = csv::to_ll(threads, "ABILITY_VI_THREADS", 0);
            if (t < 1) throw ValidationError("ABILITY_VI_THREADS must be >= 1");
        }
        bool stochastic = cmd == "synth" || cmd == "simulate" || cmd == "fit-goals" ||
                          cmd == "predict" || cmd == "fit-ability";
        if (stochastic && seed < 0)
            throw ValidationError("--seed is required for the '" + cmd + "' command");

        Config cfg(config_path);
        fs::create_directories(out_dir);
        Run run;
        run.command = cmd;
        run.config = &cfg;
        run.out = out_dir;
        run.seed = seed < 0 ? 0 : static_cast<std::uint64_t>(seed);
        run.force = force;

        int rc = 0;
        if (cmd == "ingest")
            rc = cmd_ingest(run);
        else if (cmd == "fit-ability")
            rc = cmd_fit_ability(run, event_pair);
        else if (cmd == "rank")
            rc = cmd_rank(run, top_n);
        else if (cmd == "simulate")
            rc = cmd_simulate(run);
        else if (cmd == "fit-goals")
            rc = cmd_fit_goals(run, model, event_pair);
        else if (cmd == "predict")
            rc = cmd_predict(run, model, block, event_pair);
        else if (cmd == "evaluate")
            rc = cmd_evaluate(run);
        else if (cmd == "synth")
            rc = cmd_synth(run);
        run.manifest();
        return rc;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
