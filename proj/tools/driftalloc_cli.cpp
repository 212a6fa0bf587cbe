#include "driftalloc/error.hpp"
#include "driftalloc/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace driftalloc;

namespace {

// Flags shared by every subcommand; each maps onto a config key.
const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"--dist", "dist"},           {"--loss", "loss"},           {"--budget", "budget"},
    {"--sigma-e", "sigma_e"},     {"--max-rate", "M"},          {"--rate-grid", "rate_grid"},
    {"--delays", "delays"},       {"--n-min", "n_min"},         {"--n-max", "n_max"},
    {"--n-concepts", "n_concepts"}, {"--seed", "seed"},         {"--policy", "policy"},
    {"--deploy", "deploy"},       {"--out", "out"},
};

const std::map<std::string, std::string> kHelp = {
    {"dist", "duration spec(s), ';'-separated, e.g. 'weibull(k=2,mean=1)'"},
    {"loss", "loss curve spec, e.g. 'expdecay(alpha=1,beta=1)'"},
    {"budget", "cost-rate budget B: scalar, comma list, or log:lo:hi:n"},
    {"sigma_e", "price per unit resource-time"},
    {"M", "maximum training level M"},
    {"rate_grid", "deployment rates: comma list or log:lo:hi:n"},
    {"delays", "delay grid for delay-sweep"},
    {"n_min", "smallest deployment count N_D (verify)"},
    {"n_max", "largest deployment count N_D (verify)"},
    {"n_concepts", "simulated concepts"},
    {"seed", "root seed"},
    {"policy", "simulate: front | back | fixed | unit | block:z"},
    {"deploy", "simulate: none | fixed:N | periodic:r | randomized:r"},
    {"out", "output path (default stdout)"},
};

struct Subcommand {
    CLI::App* app = nullptr;
    std::string config_path;
    std::string cycles_path;
    std::map<std::string, std::string> values;
};

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot write '" + path + "'");
    f << text;
    if (!f) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ExperimentConfig build_config(const Subcommand& sub, const std::string& kind) {
    ExperimentConfig cfg = sub.config_path.empty() ? ExperimentConfig{} : parse_config(read_file(sub.config_path));
    cfg.kind = kind;
    for (const auto& [flag, key] : kFlags) {
        const auto it = sub.values.find(key);
        if (it != sub.values.end() && sub.app->count(flag) > 0) apply_setting(cfg, key, it->second);
    }
    cfg.validate();
    return cfg;
}

std::string summary(const nlohmann::json& j) { return j.dump(2) + "\n"; }

int run(const std::string& kind, const Subcommand& sub) {
    const auto cfg = build_config(sub, kind);
    const auto g = parse_loss(cfg.loss);
    if (kind == "alloc-sweep") {
        const auto d = parse_duration(cfg.dists.front());
        const auto budgets = cfg.budgets.empty() ? default_budget_grid(cfg.sigma_e, cfg.M) : cfg.budgets;
        const auto sweep = run_alloc_sweep(d, g, budgets, cfg.sigma_e, cfg.M);
        write_output(cfg.out, sweep.to_csv());
        if (!cfg.out.empty()) {
            const auto& best = sweep.rows[sweep.argmax];
            std::cout << summary({{"max_reduction_pct", best.reduction_pct},
                                  {"argmax_B", best.B},
                                  {"aging", std::string(to_string(sweep.aging))},
                                  {"warning", sweep.warning}});
        }
        if (!sweep.warning.empty()) std::cerr << "warning: " << sweep.warning << "\n";
    } else if (kind == "delay-sweep") {
        const auto delays = cfg.delays.empty() ? default_delay_grid() : cfg.delays;
        const auto sweep = run_delay_sweep(cfg.dists, g, single_budget(cfg, 0.1), delays);
        write_output(cfg.out, sweep.to_csv());
        if (!cfg.out.empty()) {
            nlohmann::json argmin = nlohmann::json::object();
            for (const auto& r : sweep.rows) {
                if (r.is_argmin) argmin[r.dist] = r.z;
            }
            std::cout << summary({{"argmin_z", argmin}});
        }
    } else if (kind == "deploy-compare") {
        const auto d = parse_duration(cfg.dists.front());
        const auto rates = cfg.rates.empty() ? default_rate_grid() : cfg.rates;
        const auto cmp = run_deploy_compare(d, g, rates);
        write_output(cfg.out, cmp.to_csv());
        if (!cfg.out.empty()) {
            std::cout << summary({{"max_reduction_pct", cmp.max_reduction_pct()},
                                  {"max_abs_randomized_gap_pct", cmp.max_abs_gap_pct()},
                                  {"survival_convex", cmp.survival_convex},
                                  {"flag", cmp.flag}});
        }
        if (!cmp.flag.empty()) std::cerr << "warning: " << cmp.flag << "\n";
    } else if (kind == "simulate") {
        const auto rep = run_simulate(cfg);
        write_output(cfg.out, rep.to_json() + "\n");
        if (!sub.cycles_path.empty()) write_output(sub.cycles_path, rep.outcome.records_csv());
    } else if (kind == "verify") {
        write_output(cfg.out, run_verify(cfg) + "\n");
    }
    return 0;
}

int error_exit(std::string_view code, const std::string& message, int status) {
    std::cout << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-allocation and deployment-schedule experiments under sudden concept drift"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"alloc-sweep", "fixed vs front-loading allocation over a budget grid (CSV)"},
        {"delay-sweep", "delayed-block allocation over a delay grid (CSV)"},
        {"deploy-compare", "periodic vs fixed-N optimal vs randomized deployment over a rate grid (CSV)"},
        {"simulate", "renewal Monte Carlo of a policy and schedule (JSON)"},
        {"verify", "aging class, PMP certificate, KKT residuals, chain-vs-solver deltas (JSON)"},
    };
    std::map<std::string, Subcommand> subs;
    for (const auto& [name, help] : kinds) {
        auto& sub = subs[name];
        sub.app = app.add_subcommand(name, help);
        sub.app->add_option("--config", sub.config_path, "key=value config file (flags override it)");
        for (const auto& [flag, key] : kFlags) sub.app->add_option(flag, sub.values[key], kHelp.at(key));
        if (name == "simulate") sub.app->add_option("--cycles-out", sub.cycles_path, "per-cycle CSV path");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit("Usage", e.what(), 2);
    }

    for (auto& [name, sub] : subs) {
        if (!sub.app->parsed()) continue;
        try {
            return run(name, sub);
        } catch (const Error& e) {
            const bool input = e.code() == ErrorCode::Parse || e.code() == ErrorCode::Domain;
            return error_exit(to_string(e.code()), e.what(), input ? 2 : 1);
        } catch (const std::exception& e) {
            return error_exit("Internal", e.what(), 1);
        }
    }
    return 0;
}
