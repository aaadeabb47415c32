#include "pitchvi/hier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "pitchvi/csv.hpp"

namespace pitchvi {

namespace {

constexpr double kHyperSd = 100.0;
constexpr double kInvGammaShape = 0.1;
constexpr double kInvGammaScale = 0.1;

double normal_log_pdf(double x, double mean, double sd) {
    double z = (x - mean) / sd;
    return -0.5 * std::log(2.0 * M_PI * sd * sd) - 0.5 * z * z;
}

// Inv-Gamma placed on the scale sigma itself.
double inv_gamma_log_pdf(double x, double shape, double scale) {
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
           scale / x;
}

}  // namespace

AbilityFeatures f_delta(const MatchResult& fixture, const AbilityLookup& ability,
                        FDeltaMode mode, const EventPair& pair, double prior_mean) {
    if (fixture.starters_home.size() != 11 || fixture.starters_away.size() != 11)
        throw ValidationError("fixture " + std::to_string(fixture.fixture_id) +
                              " does not have 11 starters per side");
    std::vector<std::string> attack, defend;
    if (mode == FDeltaMode::Multi) {
        attack = {"Goal", "Shots", "ChainEvents"};
        defend = {"GoalStop", "ShotStop", "AntiPass"};
    } else {
        attack = {pair.e1};
        defend = {pair.e2};
    }
    auto mu = [&](const std::string& event, long long player) {
        auto v = ability(event, player);
        return v ? *v : prior_mean;
    };
    auto sum = [&](const std::vector<long long>& xi, const std::vector<std::string>& events) {
        double total = 0.0;
        for (long long p : xi)
            for (const auto& e : events) total += mu(e, p);
        return total;
    };
    AbilityFeatures f;
    f.f_h = sum(fixture.starters_home, attack) - sum(fixture.starters_away, defend);
    f.f_a = sum(fixture.starters_away, attack) - sum(fixture.starters_home, defend);
    return f;
}

AbilityLookup ability_lookup_from_states(const std::vector<VariationalState>& states) {
    return [states](const std::string& event, long long player) -> std::optional<double> {
        for (const auto& st : states) {
            for (int e = 0; e < 2; ++e) {
                if (st.events[e] != event) continue;
                int p = st.index_of(player);
                if (p >= 0) return st.mu[p * 2 + e];
            }
        }
        return std::nullopt;
    };
}

int HierPosterior::team_index(long long team) const {
    for (size_t i = 0; i < teams.size(); ++i)
        if (teams[i] == team) return static_cast<int>(i);
    return -1;
}

double hier_log_posterior(const HierDraw& draw, const std::vector<long long>& teams,
                          const std::vector<MatchResult>& data,
                          const std::vector<AbilityFeatures>* features) {
    if (draw.sigma_att <= 0.0 || draw.sigma_def <= 0.0)
        return -std::numeric_limits<double>::infinity();
    std::map<long long, int> index;
    for (size_t i = 0; i < teams.size(); ++i) index[teams[i]] = static_cast<int>(i);

    double lp = 0.0;
    for (size_t k = 0; k < data.size(); ++k) {
        const MatchResult& m = data[k];
        auto hi = index.find(m.home_team);
        auto ai = index.find(m.away_team);
        if (hi == index.end() || ai == index.end())
            throw ReferentialError("fixture " + std::to_string(m.fixture_id) +
                                   " references a team outside the model");
        double f_h = features ? (*features)[k].f_h : 0.0;
        double f_a = features ? (*features)[k].f_a : 0.0;
        double log_th = draw.home + draw.att[hi->second] + draw.def[ai->second] + f_h;
        double log_ta = draw.att[ai->second] + draw.def[hi->second] + f_a;
        lp += m.y_h * log_th - std::exp(log_th) - std::lgamma(m.y_h + 1.0);
        lp += m.y_a * log_ta - std::exp(log_ta) - std::lgamma(m.y_a + 1.0);
    }
    for (size_t t = 0; t < teams.size(); ++t) {
        lp += normal_log_pdf(draw.att[t], draw.mu_att, draw.sigma_att);
        lp += normal_log_pdf(draw.def[t], draw.mu_def, draw.sigma_def);
    }
    lp += normal_log_pdf(draw.home, 0.0, kHyperSd);
    lp += normal_log_pdf(draw.mu_att, 0.0, kHyperSd);
    lp += normal_log_pdf(draw.mu_def, 0.0, kHyperSd);
    lp += inv_gamma_log_pdf(draw.sigma_att, kInvGammaShape, kInvGammaScale);
    lp += inv_gamma_log_pdf(draw.sigma_def, kInvGammaShape, kInvGammaScale);
    return lp;
}

namespace {

// Unconstrained coordinates: home, mu_att, mu_def, log sigma_att, log
// sigma_def, then T-1 free attack and T-1 free defence entries; the last
// team's entry is minus the sum of the others.
HierDraw unpack(const std::vector<double>& theta, int n_teams) {
    HierDraw d;
    d.home = theta[0];
    d.mu_att = theta[1];
    d.mu_def = theta[2];
    d.sigma_att = std::exp(theta[3]);
    d.sigma_def = std::exp(theta[4]);
    d.att.assign(n_teams, 0.0);
    d.def.assign(n_teams, 0.0);
    double sa = 0.0, sd = 0.0;
    for (int t = 0; t < n_teams - 1; ++t) {
        d.att[t] = theta[5 + t];
        d.def[t] = theta[5 + (n_teams - 1) + t];
        sa += d.att[t];
        sd += d.def[t];
    }
    d.att[n_teams - 1] = -sa;
    d.def[n_teams - 1] = -sd;
    return d;
}

double effective_sample_size(const std::vector<double>& x) {
    const size_t n = x.size();
    if (n < 10) return static_cast<double>(n);
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    if (var == 0.0) return static_cast<double>(n);
    // Initial positive sequence estimator on pairwise autocorrelation sums.
    double rho_sum = 0.0;
    for (size_t lag = 1; lag + 1 < n; lag += 2) {
        auto acf = [&](size_t l) {
            double c = 0.0;
            for (size_t i = 0; i + l < n; ++i) c += (x[i] - mean) * (x[i + l] - mean);
            return c / (n * var);
        };
        double pair = acf(lag) + acf(lag + 1);
        if (pair <= 0.0) break;
        rho_sum += pair;
    }
    return static_cast<double>(n) / (1.0 + 2.0 * rho_sum);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        size_t h = c.size() / 2;
        if (h < 2) continue;
        halves.emplace_back(c.begin(), c.begin() + h);
        halves.emplace_back(c.begin() + h, c.begin() + 2 * h);
    }
    if (halves.size() < 2) return 1.0;
    size_t n = halves[0].size();
    std::vector<double> means;
    double w = 0.0;
    for (const auto& h : halves) {
        double m = std::accumulate(h.begin(), h.end(), 0.0) / h.size();
        means.push_back(m);
        double v = 0.0;
        for (double v2 : h) v += (v2 - m) * (v2 - m);
        w += v / (h.size() - 1);
    }
    w /= halves.size();
    double grand = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double b = 0.0;
    for (double m : means) b += (m - grand) * (m - grand);
    b *= static_cast<double>(n) / (means.size() - 1);
    if (w == 0.0) return 1.0;
    double var_plus = (static_cast<double>(n - 1) / n) * w + b / n;
    return std::sqrt(var_plus / w);
}

}  // namespace

HierPosterior mcmc_fit(const std::vector<MatchResult>& data,
                       const std::vector<AbilityFeatures>* features, const McmcConfig& config) {
    if (features && features->size() != data.size())
        throw DomainError("features must align with data");
    HierPosterior post;
    {
        std::map<long long, bool> seen;
        for (const auto& m : data) {
            seen[m.home_team] = true;
            seen[m.away_team] = true;
        }
        for (const auto& [t, _] : seen) post.teams.push_back(t);
    }
    // Prior-only runs still need at least two teams to parameterize.
    if (post.teams.size() < 2) post.teams = {0, 1};
    const int n_teams = static_cast<int>(post.teams.size());
    const int dim = 5 + 2 * (n_teams - 1);

    // Log target includes the Jacobian of the log-scale transform.
    auto log_target = [&](const std::vector<double>& theta) {
        HierDraw d = unpack(theta, n_teams);
        return hier_log_posterior(d, post.teams, data, features) + theta[3] + theta[4];
    };

    const int per_chain = (config.n_draws + config.n_chains - 1) / config.n_chains;
    std::vector<std::vector<std::vector<double>>> chain_param_draws(config.n_chains);

    long long accepted = 0, proposed = 0;
    for (int chain = 0; chain < config.n_chains; ++chain) {
        std::mt19937_64 rng(config.seed * 1000003ULL + chain);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif;

        std::vector<double> theta(dim, 0.0);
        double lp = log_target(theta);
        if (!std::isfinite(lp)) throw Error("non-finite log posterior at initialization");

        std::vector<double> scale(dim, 0.1);
        double log_global = 0.0;
        // Welford accumulators for per-coordinate proposal scales.
        std::vector<double> run_mean(dim, 0.0), run_m2(dim, 0.0);
        long long run_n = 0;

        std::vector<double> prop(dim);
        int stored = 0, since_thin = 0;
        const int total_iters = config.warmup + per_chain * config.thin;
        for (int iter = 0; iter < total_iters; ++iter) {
            double g = std::exp(log_global);
            for (int i = 0; i < dim; ++i) prop[i] = theta[i] + g * scale[i] * normal(rng);
            double lp_prop = log_target(prop);
            bool accept = std::log(unif(rng)) < lp_prop - lp;
            if (accept) {
                theta = prop;
                lp = lp_prop;
            }
            if (iter >= config.warmup) {
                ++proposed;
                if (accept) ++accepted;
            }

            if (iter < config.warmup) {
                // Robbins-Monro on the acceptance rate, per-coordinate scales
                // from the running sample variance.
                double eta = 1.0 / std::sqrt(iter + 10.0);
                log_global += eta * ((accept ? 1.0 : 0.0) - 0.234);
                ++run_n;
                for (int i = 0; i < dim; ++i) {
                    double delta = theta[i] - run_mean[i];
                    run_mean[i] += delta / run_n;
                    run_m2[i] += delta * (theta[i] - run_mean[i]);
                }
                if (run_n > 100 && iter % 100 == 0) {
                    for (int i = 0; i < dim; ++i) {
                        double sd = std::sqrt(run_m2[i] / (run_n - 1));
                        if (sd > 1e-8) scale[i] = sd;
                    }
                }
            } else {
                if (++since_thin >= config.thin) {
                    since_thin = 0;
                    if (stored < per_chain) {
                        chain_param_draws[chain].push_back(theta);
                        ++stored;
                    }
                }
            }
        }
    }

    // Assemble draws and per-parameter diagnostics.
    std::vector<std::string> names = {"home", "mu_att", "mu_def", "sigma_att", "sigma_def"};
    for (int t = 0; t < n_teams; ++t) names.push_back("att[" + std::to_string(post.teams[t]) + "]");
    for (int t = 0; t < n_teams; ++t) names.push_back("def[" + std::to_string(post.teams[t]) + "]");

    auto param_value = [&](const HierDraw& d, size_t which) -> double {
        if (which == 0) return d.home;
        if (which == 1) return d.mu_att;
        if (which == 2) return d.mu_def;
        if (which == 3) return d.sigma_att;
        if (which == 4) return d.sigma_def;
        size_t t = which - 5;
        if (t < static_cast<size_t>(n_teams)) return d.att[t];
        return d.def[t - n_teams];
    };

    std::vector<std::vector<HierDraw>> chain_draws(config.n_chains);
    for (int c = 0; c < config.n_chains; ++c) {
        for (const auto& theta : chain_param_draws[c]) {
            HierDraw d = unpack(theta, n_teams);
            chain_draws[c].push_back(d);
            if (static_cast<int>(post.draws.size()) < config.n_draws) post.draws.push_back(d);
        }
    }

    post.diagnostics.acceptance_rate =
        proposed ? static_cast<double>(accepted) / proposed : 0.0;
    for (size_t w = 0; w < names.size(); ++w) {
        std::vector<double> all;
        std::vector<std::vector<double>> per_chain_vals;
        for (const auto& cd : chain_draws) {
            std::vector<double> vals;
            for (const auto& d : cd) vals.push_back(param_value(d, w));
            all.insert(all.end(), vals.begin(), vals.end());
            per_chain_vals.push_back(std::move(vals));
        }
        post.diagnostics.ess[names[w]] = effective_sample_size(all);
        post.diagnostics.rhat[names[w]] = split_rhat(per_chain_vals);
    }
    return post;
}

double poisson_tail_over(double theta, double threshold) {
    if (theta < 0.0) throw DomainError("rate must be non-negative");
    int m = static_cast<int>(std::ceil(threshold));
    if (m <= 0) return 1.0;
    if (theta == 0.0) return 0.0;
    double cdf = 0.0, term = std::exp(-theta);
    for (int k = 0; k < m; ++k) {
        cdf += term;
        term *= theta / (k + 1);
    }
    return 1.0 - cdf;
}

double predict_over_under(const HierPosterior& posterior, const MatchResult& fixture,
                          const AbilityFeatures* features, double threshold) {
    int hi = posterior.team_index(fixture.home_team);
    int ai = posterior.team_index(fixture.away_team);
    if (hi < 0 || ai < 0)
        throw ReferentialError("fixture " + std::to_string(fixture.fixture_id) +
                               " involves a team unseen at fit time");
    if (posterior.draws.empty()) throw DomainError("posterior has no draws");
    double f_h = features ? features->f_h : 0.0;
    double f_a = features ? features->f_a : 0.0;
    double total = 0.0;
    for (const auto& d : posterior.draws) {
        double theta = std::exp(d.home + d.att[hi] + d.def[ai] + f_h) +
                       std::exp(d.att[ai] + d.def[hi] + f_a);
        total += poisson_tail_over(theta, threshold);
    }
    return total / posterior.draws.size();
}

BlockSchedule make_block_schedule(const std::vector<long long>& season1,
                                  const std::vector<long long>& season2) {
    BlockSchedule s;
    s.blocks.push_back(season1);
    size_t pos = 0;
    const size_t kChunk = 80;
    while (pos < season2.size()) {
        size_t n = std::min(kChunk, season2.size() - pos);
        s.blocks.emplace_back(season2.begin() + pos, season2.begin() + pos + n);
        pos += n;
    }
    return s;
}

std::vector<BlockPrediction> run_block_experiment(
    const std::vector<MatchResult>& all_data, const BlockSchedule& schedule, HierModel model,
    const McmcConfig& config,
    const std::function<AbilityFeatures(int block, const MatchResult&)>& features_for,
    std::vector<long long>* excluded) {
    if (model == HierModel::Extended && !features_for)
        throw ValidationError("extended model requires ability features");
    std::map<long long, const MatchResult*> by_id;
    for (const auto& m : all_data) by_id[m.fixture_id] = &m;
    auto fixture = [&](long long id) -> const MatchResult& {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw ReferentialError("schedule references unknown fixture " + std::to_string(id));
        return *it->second;
    };

    std::vector<BlockPrediction> out;
    std::vector<MatchResult> fit_data;
    for (long long id : schedule.blocks.at(0)) fit_data.push_back(fixture(id));

    for (size_t b = 1; b < schedule.blocks.size(); ++b) {
        std::vector<AbilityFeatures> fit_features(fit_data.size());
        if (model == HierModel::Extended)
            for (size_t i = 0; i < fit_data.size(); ++i)
                fit_features[i] = features_for(static_cast<int>(b), fit_data[i]);

        McmcConfig block_config = config;
        block_config.seed = config.seed + b;
        HierPosterior post = mcmc_fit(fit_data, &fit_features, block_config);

        for (long long id : schedule.blocks[b]) {
            const MatchResult& m = fixture(id);
            if (post.team_index(m.home_team) < 0 || post.team_index(m.away_team) < 0) {
                if (excluded) excluded->push_back(id);
                continue;
            }
            AbilityFeatures f;
            if (model == HierModel::Extended) f = features_for(static_cast<int>(b), m);
            BlockPrediction pred;
            pred.fixture_id = id;
            pred.block = static_cast<int>(b);
            pred.p_over = predict_over_under(post, m, &f);
            pred.actual_over = m.y_h + m.y_a >= 3;
            out.push_back(pred);
        }
        for (long long id : schedule.blocks[b]) fit_data.push_back(fixture(id));
    }
    return out;
}

RocResult roc_auc(const std::vector<std::pair<double, bool>>& scores) {
    long long n_pos = 0, n_neg = 0;
    for (const auto& [_, label] : scores) (label ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("roc_auc requires at least one positive and one negative label");

    std::vector<std::pair<double, bool>> sorted = scores;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocResult result;
    result.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long long tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    size_t i = 0;
    while (i < sorted.size()) {
        double score = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == score) {
            (sorted[i].second ? tp : fp)++;
            ++i;
        }
        double fpr = static_cast<double>(fp) / n_neg;
        double tpr = static_cast<double>(tp) / n_pos;
        result.points.push_back({fpr, tpr, score});
        result.auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    return result;
}

std::vector<MatchResult> read_results_csv(const std::string& path) {
    csv::Reader r(path);
    int c_fix = r.column("fixture_id");
    int c_home = r.column("home_team");
    int c_away = r.column("away_team");
    int c_yh = r.column("y_h");
    int c_ya = r.column("y_a");
    int c_sh = r.column_or("starters_home", -1);
    int c_sa = r.column_or("starters_away", -1);
    std::vector<MatchResult> out;
    std::vector<std::string> f;
    auto parse_xi = [&](const std::string& s) {
        std::vector<long long> xi;
        if (s.empty()) return xi;
        for (const auto& part : csv::split(s, ';'))
            xi.push_back(csv::to_ll(part, "starter", r.line_no()));
        return xi;
    };
    while (r.next(f)) {
        MatchResult m;
        m.fixture_id = csv::to_ll(f[c_fix], "fixture_id", r.line_no());
        m.home_team = csv::to_ll(f[c_home], "home_team", r.line_no());
        m.away_team = csv::to_ll(f[c_away], "away_team", r.line_no());
        m.y_h = static_cast<int>(csv::to_ll(f[c_yh], "y_h", r.line_no()));
        m.y_a = static_cast<int>(csv::to_ll(f[c_ya], "y_a", r.line_no()));
        if (m.y_h < 0 || m.y_a < 0) throw ParseError("negative goal count", r.line_no());
        if (c_sh >= 0) m.starters_home = parse_xi(f[c_sh]);
        if (c_sa >= 0) m.starters_away = parse_xi(f[c_sa]);
        out.push_back(std::move(m));
    }
    return out;
}

void write_results_csv(const std::vector<MatchResult>& results, const std::string& path) {
    csv::Writer w(path);
    w.row({"fixture_id", "home_team", "away_team", "y_h", "y_a", "starters_home",
           "starters_away"});
    auto join = [](const std::vector<long long>& xi) {
        std::string s;
        for (size_t i = 0; i < xi.size(); ++i) {
            if (i) s += ';';
            s += std::to_string(xi[i]);
        }
        return s;
    };
    for (const auto& m : results)
        w.row({std::to_string(m.fixture_id), std::to_string(m.home_team),
               std::to_string(m.away_team), std::to_string(m.y_h), std::to_string(m.y_a),
               join(m.starters_home), join(m.starters_away)});
}

std::vector<MatchResult> extract_match_results(const TouchLog& log) {
    std::vector<MatchResult> out;
    for (const auto& fx : log.per_fixture) {
        const auto& meta = log.meta(fx.fixture_id);
        MatchResult m;
        m.fixture_id = fx.fixture_id;
        m.home_team = meta.home_team_id;
        m.away_team = meta.away_team_id;
        for (const auto& ev : fx.events) {
            if (ev.type != EventType::Goal) continue;
            (ev.team_id == meta.home_team_id ? m.y_h : m.y_a)++;
        }
        auto xi = starting_elevens(fx, meta);
        m.starters_home = std::move(xi.first);
        m.starters_away = std::move(xi.second);
        out.push_back(std::move(m));
    }
    return out;
}

void save_draws_json(const HierPosterior& posterior, const std::string& path) {
    nlohmann::json j;
    j["teams"] = posterior.teams;
    j["draws"] = nlohmann::json::array();
    for (const auto& d : posterior.draws) {
        j["draws"].push_back({{"home", d.home},
                              {"mu_att", d.mu_att},
                              {"mu_def", d.mu_def},
                              {"sigma_att", d.sigma_att},
                              {"sigma_def", d.sigma_def},
                              {"att", d.att},
                              {"def", d.def}});
    }
    j["diagnostics"] = {{"acceptance_rate", posterior.diagnostics.acceptance_rate},
                        {"ess", posterior.diagnostics.ess},
                        {"rhat", posterior.diagnostics.rhat}};
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << j.dump() << '\n';
}

HierPosterior load_draws_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
    HierPosterior post;
    post.teams = j.at("teams").get<std::vector<long long>>();
    for (const auto& jd : j.at("draws")) {
        HierDraw d;
        d.home = jd.at("home");
        d.mu_att = jd.at("mu_att");
        d.mu_def = jd.at("mu_def");
        d.sigma_att = jd.at("sigma_att");
        d.sigma_def = jd.at("sigma_def");
        d.att = jd.at("att").get<std::vector<double>>();
        d.def = jd.at("def").get<std::vector<double>>();
        post.draws.push_back(std::move(d));
    }
    if (j.contains("diagnostics")) {
        post.diagnostics.acceptance_rate = j["diagnostics"].value("acceptance_rate", 0.0);
        if (j["diagnostics"].contains("ess"))
            post.diagnostics.ess =
                j["diagnostics"]["ess"].get<std::map<std::string, double>>();
        if (j["diagnostics"].contains("rhat"))
            post.diagnostics.rhat =
                j["diagnostics"]["rhat"].get<std::map<std::string, double>>();
    }
    return post;
}

}  // namespace pitchvi
