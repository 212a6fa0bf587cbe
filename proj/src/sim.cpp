#include "driftalloc/sim.hpp"

#include "driftalloc/error.hpp"
#include "driftalloc/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace driftalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ḡ(x), with the singular point of PurePower mapped to +∞.
double loss_at(const LossCurve& g, double x) {
    if (x == 0.0 && g.singular_at_origin()) return kInf;
    return g.value(x);
}

Estimate plain_mean(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / n;
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

nlohmann::json to_json(const Estimate& e) {
    return {{"mean", e.mean}, {"se", e.se}};
}

}  // namespace

void SimConfig::validate() const {
    require(n_concepts >= 1, "simulation needs at least one concept");
    require(sigma_e > 0.0, "σ_e must be positive");
    require(!(schedule && randomized), "give either a static or a randomized schedule, not both");
    if (randomized) require(randomized->gamma >= 0.0 && randomized->gamma <= 1.0, "γ must lie in [0, 1]");
}

Estimate jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den) {
    require(num.size() == den.size() && !num.empty(), "jackknife needs matching non-empty samples");
    double sn = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        sn += num[i];
        sd += den[i];
    }
    Estimate e{sn / sd, 0.0};
    const std::size_t n = num.size();
    if (n < 2) return e;
    if (!std::isfinite(sn)) return {e.mean, kInf};
    // Leave-one-out deviations R_{−i} − R = −(num_i − R·den_i)/(Σden − den_i),
    // written without subtracting nearly equal ratios.
    std::vector<double> dev(n);
    double mean_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dev[i] = -(num[i] - e.mean * den[i]) / (sd - den[i]);
        mean_dev += dev[i];
    }
    mean_dev /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : dev) ss += (v - mean_dev) * (v - mean_dev);
    e.se = std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
    return e;
}

CycleRecord simulate_cycle(const SimConfig& cfg, double y, const DeploymentSchedule* schedule) {
    const auto& policy = cfg.policy;
    const auto& g = cfg.loss;
    CycleRecord rec;
    rec.duration = y;

    for (std::size_t i = 0; i < policy.segments(); ++i) {
        const double a = policy.breakpoints()[i];
        if (a >= y) break;
        const double len = std::min(policy.segment_end(i), y) - a;
        const double x0 = policy.progress_at_segment(i);
        const double e = policy.levels()[i];
        rec.server_loss += e > 0.0 ? g.integral(x0, x0 + e * len) / e : loss_at(g, x0) * len;
        rec.cost += cfg.sigma_e * e * len;
    }

    if (schedule == nullptr) {
        rec.client_loss = rec.server_loss;
        return rec;
    }
    const auto& t = schedule->offsets();
    for (std::size_t j = 0; j < t.size() && t[j] < y; ++j) {
        const double end = j + 1 < t.size() ? std::min(t[j + 1], y) : y;
        rec.client_loss += loss_at(g, policy.progress(t[j])) * (end - t[j]);
        if (j >= 1) ++rec.deployments;
    }
    return rec;
}

SimOutcome simulate(const SimConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_concepts;
    SimOutcome out;
    out.n_concepts = n;

    std::vector<double> durations(n), server(n), client(n), cost(n), deploys(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream duration_rng(cfg.seed, i, StreamPurpose::Duration);
        const double y = cfg.duration.sample(duration_rng);

        const DeploymentSchedule* schedule = cfg.schedule ? &*cfg.schedule : nullptr;
        if (cfg.randomized) {
            RngStream coin(cfg.seed, i, StreamPurpose::ScheduleChoice);
            schedule = coin.uniform() < cfg.randomized->gamma ? &cfg.randomized->schedule_low
                                                                : &cfg.randomized->schedule_high;
        }
        const CycleRecord rec = simulate_cycle(cfg, y, schedule);
        durations[i] = rec.duration;
        server[i] = rec.server_loss;
        client[i] = rec.client_loss;
        cost[i] = rec.cost;
        deploys[i] = static_cast<double>(rec.deployments);
        out.total_time += rec.duration;
        out.server_infinite = out.server_infinite || std::isinf(rec.server_loss);
        out.client_infinite = out.client_infinite || std::isinf(rec.client_loss);
        if (cfg.keep_records) out.records.push_back(rec);
    }

    out.server_loss_avg = jackknife_ratio(server, durations);
    out.client_loss_avg = jackknife_ratio(client, durations);
    out.cost_rate_avg = jackknife_ratio(cost, durations);
    out.deployment_rate_avg = jackknife_ratio(deploys, durations);
    out.deployments_per_concept = plain_mean(deploys);
    return out;
}

std::string SimOutcome::summary_json() const {
    nlohmann::json j;
    j["n_concepts"] = n_concepts;
    j["total_time"] = total_time;
    // JSON has no infinity; diverged averages are reported as null plus a flag.
    const auto est = [](const Estimate& e, bool infinite) {
        return infinite ? nlohmann::json{{"mean", nullptr}, {"se", nullptr}} : to_json(e);
    };
    j["server_loss_avg"] = est(server_loss_avg, server_infinite);
    j["client_loss_avg"] = est(client_loss_avg, client_infinite);
    j["server_infinite"] = server_infinite;
    j["client_infinite"] = client_infinite;
    j["cost_rate_avg"] = to_json(cost_rate_avg);
    j["deployment_rate_avg"] = to_json(deployment_rate_avg);
    j["deployments_per_concept"] = to_json(deployments_per_concept);
    return j.dump(2);
}

std::string SimOutcome::records_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "cycle,duration,server_cycle_loss,client_cycle_loss,cost,deployments\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        os << i << ',' << r.duration << ',' << r.server_loss << ',' << r.client_loss << ',' << r.cost << ','
           << r.deployments << '\n';
    }
    return os.str();
}

}  // namespace driftalloc
