#include "driftalloc/experiments.hpp"

#include "driftalloc/error.hpp"
#include "driftalloc/textspec.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace driftalloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using textspec::format_double;

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find(sep, start), text.size());
        auto part = trim(text.substr(start, end - start));
        if (!part.empty()) out.push_back(std::move(part));
        start = end + 1;
    }
    return out;
}

std::size_t parse_count(std::string_view value, std::string_view key) {
    const double v = textspec::parse_double(value, key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
        fail(ErrorCode::Parse, std::string(key) + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

// "name:value" → value, for policy and deployment specs.
double spec_argument(std::string_view spec, std::string_view what) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) fail(ErrorCode::Parse, std::string(what) + " needs ':<value>'");
    return textspec::parse_double(spec.substr(colon + 1), what);
}

std::string blank_if_nan(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        g.push_back(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))));
    }
    return g;
}

// End of the full-rate block of a delayed-block policy.
double block_end(const AllocationPolicy& p) {
    double end = 0.0;
    for (std::size_t i = 0; i < p.segments(); ++i) {
        if (p.levels()[i] > 0.0) end = p.segment_end(i);
    }
    return end;
}

}  // namespace

void ExperimentConfig::validate() const {
    require(!dists.empty(), "at least one distribution is required");
    require(sigma_e > 0.0 && M > 0.0, "σ_e and M must be positive");
    for (double b : budgets) require(b >= 0.0, "budgets must be non-negative");
    for (double r : rates) require(r > 0.0, "rate grid must be positive");
    for (double z : delays) require(z >= 0.0, "delays must be non-negative");
    require(n_min >= 1 && n_min <= n_max, "N_D bounds need 1 <= n_min <= n_max");
    require(n_concepts >= 1, "n_concepts must be >= 1");
}

void apply_setting(ExperimentConfig& cfg, std::string_view key_in, std::string_view value_in) {
    const std::string key = trim(key_in);
    const std::string value = trim(value_in);
    if (key == "kind") {
        cfg.kind = value;
    } else if (key == "dist") {
        cfg.dists = split_list(value, ';');
        for (const auto& d : cfg.dists) parse_duration(d);
    } else if (key == "loss") {
        parse_loss(value);
        cfg.loss = value;
    } else if (key == "budget") {
        cfg.budgets = textspec::parse_grid(value);
    } else if (key == "sigma_e" || key == "sigma-e") {
        cfg.sigma_e = textspec::parse_double(value, key);
    } else if (key == "M" || key == "max_rate" || key == "max-rate") {
        cfg.M = textspec::parse_double(value, key);
    } else if (key == "rate_grid" || key == "rate-grid") {
        cfg.rates = textspec::parse_grid(value);
    } else if (key == "delays") {
        cfg.delays = textspec::parse_grid(value);
    } else if (key == "n_min" || key == "n-min") {
        cfg.n_min = parse_count(value, key);
    } else if (key == "n_max" || key == "n-max") {
        cfg.n_max = parse_count(value, key);
    } else if (key == "seed") {
        cfg.seed = parse_count(value, key);
    } else if (key == "n_concepts" || key == "n-concepts") {
        cfg.n_concepts = parse_count(value, key);
    } else if (key == "policy") {
        cfg.policy = value;
    } else if (key == "deploy") {
        cfg.deploy = value;
    } else if (key == "out") {
        cfg.out = value;
    } else {
        fail(ErrorCode::Parse, "unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(line_no);
        if (eq == std::string::npos) fail(ErrorCode::Parse, where + ": expected key=value");
        try {
            apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            fail(ErrorCode::Parse, where + " (" + trim(line.substr(0, eq)) + "): " + e.what());
        }
    }
    return cfg;
}

std::vector<double> default_budget_grid(double sigma_e, double M) {
    return log_grid(0.01 * M * sigma_e, 0.999 * M * sigma_e, 40);
}

std::vector<double> default_delay_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(0.1 * i);
    return g;
}

std::vector<double> default_rate_grid() { return log_grid(0.1, 10.0, 40); }

BudgetSpec single_budget(const ExperimentConfig& cfg, double fallback_B) {
    BudgetSpec b{cfg.budgets.empty() ? fallback_B : cfg.budgets.front(), cfg.sigma_e, cfg.M};
    b.validate();
    return b;
}

AllocSweep run_alloc_sweep(const DurationModel& d, const LossCurve& g, const std::vector<double>& budgets,
                           double sigma_e, double M) {
    AllocSweep out;
    out.aging = classify_aging(d).tag;
    if (out.aging != AgingTag::DMRL && out.aging != AgingTag::CONSTANT) {
        out.warning = "aging class " + std::string(to_string(out.aging)) +
                      ": front-loading is not certified optimal for this distribution";
    }
    double best = -std::numeric_limits<double>::infinity();
    for (double B : budgets) {
        const BudgetSpec budget{B, sigma_e, M};
        budget.validate();
        AllocSweepRow row;
        row.B = B;
        row.t_star = front_loading_switch(d, budget);
        row.loss_fixed = time_average_loss(AllocationPolicy::constant(std::min(B / sigma_e, M)), g, d);
        row.loss_opt = time_average_loss(AllocationPolicy::front_loading(row.t_star, M), g, d);
        row.reduction_pct = 100.0 * (1.0 - row.loss_opt / row.loss_fixed);
        if (row.reduction_pct > best) {
            best = row.reduction_pct;
            out.argmax = out.rows.size();
        }
        out.rows.push_back(row);
    }
    return out;
}

std::string AllocSweep::to_csv() const {
    std::ostringstream os;
    os << "B,t_star,loss_fixed,loss_opt,reduction_pct\n";
    for (const auto& r : rows) {
        os << format_double(r.B) << ',' << format_double(r.t_star) << ',' << format_double(r.loss_fixed) << ','
           << format_double(r.loss_opt) << ',' << format_double(r.reduction_pct) << '\n';
    }
    return os.str();
}

DelaySweep run_delay_sweep(const std::vector<std::string>& dists, const LossCurve& g, const BudgetSpec& budget,
                           const std::vector<double>& delays) {
    require(budget.binding(), "delay sweep needs a binding budget (B < M·σ_e)");
    DelaySweep out;
    for (const auto& spec : dists) {
        const auto d = parse_duration(spec);
        const std::size_t first = out.rows.size();
        double min_loss = std::numeric_limits<double>::infinity();
        for (double z : delays) {
            const auto p = delayed_block(d, budget, z);
            DelaySweepRow row;
            row.dist = d.to_string();
            row.z = z;
            row.T_z = block_end(p);
            row.loss = time_average_loss(p, g, d);
            row.budget_slack = p.budget_slack;
            min_loss = std::min(min_loss, row.loss);
            out.rows.push_back(row);
        }
        for (std::size_t i = first; i < out.rows.size(); ++i) {
            if (out.rows[i].loss <= min_loss + 1e-9 * std::abs(min_loss)) {
                out.rows[i].is_argmin = true;
                break;
            }
        }
    }
    return out;
}

std::string DelaySweep::to_csv() const {
    std::ostringstream os;
    os << "dist,z,T_z,loss,budget_slack,is_argmin\n";
    for (const auto& r : rows) {
        os << '"' << r.dist << "\"," << format_double(r.z) << ',' << format_double(r.T_z) << ','
           << format_double(r.loss) << ',' << (r.budget_slack ? 1 : 0) << ',' << (r.is_argmin ? 1 : 0) << '\n';
    }
    return os.str();
}

DeployCompare run_deploy_compare(const DurationModel& d, const LossCurve& g, const std::vector<double>& rates) {
    DeployCompare out;
    out.survival_convex = survival_is_convex(d);
    if (!out.survival_convex) {
        out.flag = "non-convex survival: randomized-vs-optimal gap expected; rate-constrained KKT schedule is heuristic";
    }
    FixedNFrontier frontier(d, g);
    for (double r : rates) {
        DeployCompareRow row;
        row.r_D = r;
        const auto mix = randomize_to_rate(frontier, r);
        row.loss_randomized = mix.mixture_loss();
        row.gamma = mix.gamma;
        row.n_low = mix.n_low;
        if (mix.n_low == 0) {
            row.rate_optimal = row.loss_optimal = row.loss_periodic = kNaN;
            row.reduction_pct = row.randomized_gap_pct = kNaN;
        } else {
            row.rate_optimal = mix.count_low / d.mean();
            row.loss_optimal = mix.loss_low;
            row.loss_periodic = client_time_average_loss(periodic_for_count(d, mix.count_low), g, d);
            row.reduction_pct = 100.0 * (1.0 - row.loss_optimal / row.loss_periodic);
            row.randomized_gap_pct = 100.0 * (row.loss_optimal - row.loss_randomized) / row.loss_optimal;
        }
        out.rows.push_back(row);
    }
    return out;
}

double DeployCompare::max_reduction_pct() const {
    double best = kNaN;
    for (const auto& r : rows) {
        if (!std::isnan(r.reduction_pct) && !(r.reduction_pct <= best)) best = r.reduction_pct;
    }
    return best;
}

double DeployCompare::max_abs_gap_pct() const {
    double worst = kNaN;
    for (const auto& r : rows) {
        if (!std::isnan(r.randomized_gap_pct) && !(std::abs(r.randomized_gap_pct) <= worst)) {
            worst = std::abs(r.randomized_gap_pct);
        }
    }
    return worst;
}

std::string DeployCompare::to_csv() const {
    std::ostringstream os;
    os << "r_D,loss_periodic,loss_optimal,loss_randomized,gamma,N_low,rate_optimal,reduction_pct,randomized_gap_pct\n";
    for (const auto& r : rows) {
        os << format_double(r.r_D) << ',' << blank_if_nan(r.loss_periodic) << ',' << blank_if_nan(r.loss_optimal)
           << ',' << format_double(r.loss_randomized) << ',' << format_double(r.gamma) << ',' << r.n_low << ','
           << blank_if_nan(r.rate_optimal) << ',' << blank_if_nan(r.reduction_pct) << ','
           << blank_if_nan(r.randomized_gap_pct) << '\n';
    }
    return os.str();
}

AllocationPolicy make_policy(std::string_view spec, const DurationModel& d, const BudgetSpec& budget) {
    if (spec == "front") return AllocationPolicy::front_loading(front_loading_switch(d, budget), budget.M);
    if (spec == "back") {
        const auto sw = back_loading_switch(d, budget);
        return AllocationPolicy::back_loading(sw.t_star, budget.M);
    }
    if (spec == "fixed") return AllocationPolicy::constant(std::min(budget.B / budget.sigma_e, budget.M));
    if (spec == "unit") return AllocationPolicy::constant(1.0);
    if (spec.rfind("block:", 0) == 0) return delayed_block(d, budget, spec_argument(spec, "block delay"));
    fail(ErrorCode::Parse, "unknown policy '" + std::string(spec) + "' (front|back|fixed|unit|block:z)");
}

SimulateReport run_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    SimConfig sc;
    sc.n_concepts = cfg.n_concepts;
    sc.seed = cfg.seed;
    sc.duration = parse_duration(cfg.dists.front());
    sc.loss = parse_loss(cfg.loss);
    sc.sigma_e = cfg.sigma_e;
    const auto budget = single_budget(cfg, 10.0);
    sc.policy = make_policy(cfg.policy, sc.duration, budget);

    SimulateReport rep;
    const std::string_view deploy = cfg.deploy;
    const bool unit = cfg.policy == "unit";
    if (deploy.rfind("fixed:", 0) == 0) {
        const double n = spec_argument(deploy, "fixed deployment count");
        if (!(n >= 1.0) || n != std::floor(n)) fail(ErrorCode::Parse, "fixed:N needs an integer N >= 1");
        sc.schedule = solve_fixed_n(sc.duration, sc.loss, static_cast<std::size_t>(n));
    } else if (deploy.rfind("periodic:", 0) == 0) {
        sc.schedule = periodic_for_rate(sc.duration, spec_argument(deploy, "periodic rate"));
    } else if (deploy.rfind("randomized:", 0) == 0) {
        sc.randomized = randomize_to_rate(sc.duration, sc.loss, spec_argument(deploy, "randomized rate"));
    } else if (deploy != "none") {
        fail(ErrorCode::Parse, "unknown deploy spec '" + cfg.deploy + "' (none|fixed:N|periodic:r|randomized:r)");
    }

    rep.outcome = simulate(sc);
    const double server = time_average_loss(sc.policy, sc.loss, sc.duration);
    if (std::isfinite(server)) rep.analytic_server = server;
    rep.analytic_cost = cost_rate(sc.policy, sc.duration, sc.sigma_e);
    if (sc.schedule) {
        rep.analytic_deployment_rate = effective_rate(*sc.schedule, sc.duration);
        if (unit) rep.analytic_client = client_time_average_loss(*sc.schedule, sc.loss, sc.duration);
    } else if (sc.randomized) {
        rep.analytic_deployment_rate = sc.randomized->mixture_count() / sc.duration.mean();
        if (unit) rep.analytic_client = sc.randomized->mixture_loss();
    } else {
        rep.analytic_deployment_rate = 0.0;
        rep.analytic_client = rep.analytic_server;
    }
    return rep;
}

std::string SimulateReport::to_json() const {
    auto j = nlohmann::json::parse(outcome.summary_json());
    nlohmann::json analytic = nlohmann::json::object();
    const auto put = [&](const char* key, const std::optional<double>& v) {
        analytic[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    put("server_loss", analytic_server);
    put("client_loss", analytic_client);
    put("cost_rate", analytic_cost);
    put("deployment_rate", analytic_deployment_rate);
    j["analytic"] = analytic;
    return j.dump(2);
}

std::string run_verify(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto d = parse_duration(cfg.dists.front());
    const auto g = parse_loss(cfg.loss);
    nlohmann::json j;
    j["dist"] = d.to_string();
    j["loss"] = g.to_string();
    j["aging"] = std::string(to_string(classify_aging(d).tag));
    const bool convex = d.absolutely_continuous() && survival_is_convex(d);
    j["survival_convex"] = convex;
    j["constrained_kkt"] = convex ? "certified" : "heuristic";

    const auto budget = single_budget(cfg, 10.0);
    try {
        const auto policy = AllocationPolicy::front_loading(front_loading_switch(d, budget), budget.M);
        const auto rep = pmp_verify(policy, g, d, budget);
        j["pmp"] = std::string(to_string(rep.sign_pattern));
        j["pmp_observed"] = std::string(to_string(rep.observed));
        j["pmp_certified"] = rep.certified;
        j["t_star"] = rep.t_star;
        j["nu"] = rep.nu;
        j["phi_at_tstar"] = std::abs(rep.phi_at_switch) / rep.scale;
    } catch (const Error& e) {
        j["pmp"] = nullptr;
        j["pmp_error"] = e.what();
    }

    nlohmann::json kkt = nlohmann::json::array();
    double worst = 0.0;
    std::string kkt_error;
    try {
        for (std::size_t n = cfg.n_min; n <= cfg.n_max; ++n) {
            const double r = kkt_residuals(solve_fixed_n(d, g, n), g, d).max_abs;
            kkt.push_back({{"n", n}, {"max_residual", r}});
            worst = std::max(worst, r);
        }
    } catch (const Error& e) {
        kkt_error = e.what();
    }
    j["kkt"] = kkt;
    j["kkt_max_residual"] = kkt_error.empty() ? nlohmann::json(worst) : nlohmann::json(nullptr);
    if (!kkt_error.empty()) j["kkt_error"] = kkt_error;

    const auto* e = std::get_if<Exponential>(&d.family());
    const auto* ed = std::get_if<ExpDecay>(&g.family());
    if (e != nullptr && ed != nullptr && kkt_error.empty()) {
        double delta = 0.0;
        for (std::size_t n = cfg.n_min; n <= cfg.n_max; ++n) {
            const auto a = chain_exponential(ed->beta, e->rate, n).offsets();
            const auto b = solve_fixed_n(d, g, n).offsets();
            for (std::size_t i = 0; i < a.size(); ++i) delta = std::max(delta, std::abs(a[i] - b[i]));
        }
        j["chain_vs_solver_max_delta"] = delta;
    } else {
        j["chain_vs_solver_max_delta"] = nullptr;
    }
    return j.dump(2);
}

}  // namespace driftalloc
