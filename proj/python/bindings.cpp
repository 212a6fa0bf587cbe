#include "driftalloc/alloc.hpp"
#include "driftalloc/deploy.hpp"
#include "driftalloc/dist.hpp"
#include "driftalloc/error.hpp"
#include "driftalloc/experiments.hpp"
#include "driftalloc/loss.hpp"
#include "driftalloc/sim.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

namespace py = pybind11;
using namespace driftalloc;

namespace {

py::dict pmp_dict(const PmpReport& r) {
    py::dict out;
    out["kind"] = r.kind == SwitchKind::FrontLoading ? "front" : "back";
    out["t_star"] = r.t_star;
    out["nu"] = r.nu;
    out["observed"] = std::string(to_string(r.observed));
    out["sign_pattern"] = std::string(to_string(r.sign_pattern));
    out["phi_at_switch"] = r.phi_at_switch;
    out["scale"] = r.scale;
    out["certified"] = r.certified;
    out["grid"] = r.grid;
    out["phi"] = r.phi;
    return out;
}

// Experiment config from Python keyword arguments, using the config-file keys.
ExperimentConfig config_from_kwargs(const std::string& kind, const py::kwargs& kwargs) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    for (const auto& [key, value] : kwargs) {
        apply_setting(cfg, py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
    }
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Compute-allocation and deployment-schedule models for drifting concepts";

    // ValueError subclass carrying the library's error code as `.code`. The
    // type object lives for the interpreter's lifetime, so the handle is leaked.
    static PyObject* error_type = PyErr_NewException("driftalloc._core.DriftallocError", PyExc_ValueError, nullptr);
    m.attr("DriftallocError") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error_type)(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    py::class_<DurationModel>(m, "DurationModel")
        .def(py::init([](const std::string& spec) { return parse_duration(spec); }), py::arg("spec"))
        .def_static("exponential", &DurationModel::exponential, py::arg("rate"))
        .def_static("weibull", &DurationModel::weibull, py::arg("shape"), py::arg("scale"))
        .def_static("weibull_with_mean", &DurationModel::weibull_with_mean, py::arg("shape"), py::arg("mean"))
        .def_static("erlang", &DurationModel::erlang, py::arg("stages"), py::arg("rate"))
        .def_static("hyperexponential", &DurationModel::hyperexponential, py::arg("weights"), py::arg("rates"))
        .def_static("deterministic", &DurationModel::deterministic, py::arg("value"))
        .def("mean", &DurationModel::mean)
        .def("survival", &DurationModel::survival, py::arg("t"))
        .def("log_survival", &DurationModel::log_survival, py::arg("t"))
        .def("density", &DurationModel::density, py::arg("t"))
        .def("hazard", &DurationModel::hazard, py::arg("t"))
        .def("mrl", &DurationModel::mrl, py::arg("t"))
        .def("tail_integral", &DurationModel::tail_integral, py::arg("t"))
        .def("survival_quantile", &DurationModel::survival_quantile, py::arg("q"))
        .def("sample_from_uniform", &DurationModel::sample_from_uniform, py::arg("u"))
        .def("aging", [](const DurationModel& d) { return std::string(to_string(classify_aging(d).tag)); })
        .def("survival_is_convex", [](const DurationModel& d) { return survival_is_convex(d); })
        .def("__repr__", &DurationModel::to_string);

    py::class_<LossCurve>(m, "LossCurve")
        .def(py::init([](const std::string& spec) { return parse_loss(spec); }), py::arg("spec"))
        .def_static("exp_decay", &LossCurve::exp_decay, py::arg("alpha"), py::arg("beta"))
        .def_static("shifted_power", &LossCurve::shifted_power, py::arg("a"))
        .def_static("pure_power", &LossCurve::pure_power, py::arg("a"), py::arg("integrable") = true)
        .def_static("linear", &LossCurve::linear, py::arg("beta"), py::arg("g0"))
        .def("value", &LossCurve::value, py::arg("x"))
        .def("derivative", &LossCurve::derivative, py::arg("x"))
        .def("integral", &LossCurve::integral, py::arg("x0"), py::arg("x1"))
        .def("inverse", &LossCurve::inverse, py::arg("v"))
        .def("__repr__", &LossCurve::to_string);

    py::class_<BudgetSpec>(m, "BudgetSpec")
        .def(py::init([](double B, double sigma_e, double M) {
                 BudgetSpec b{B, sigma_e, M};
                 b.validate();
                 return b;
             }),
             py::arg("B"), py::arg("sigma_e") = 1.0, py::arg("M") = 20.0)
        .def_readonly("B", &BudgetSpec::B)
        .def_readonly("sigma_e", &BudgetSpec::sigma_e)
        .def_readonly("M", &BudgetSpec::M)
        .def("binding", &BudgetSpec::binding);

    py::class_<AllocationPolicy>(m, "AllocationPolicy")
        .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("breakpoints"), py::arg("levels"))
        .def_static("constant", &AllocationPolicy::constant, py::arg("level"))
        .def_static("front_loading", &AllocationPolicy::front_loading, py::arg("t_star"), py::arg("M"))
        .def_static("back_loading", &AllocationPolicy::back_loading, py::arg("t_star"), py::arg("M"))
        .def_static("block", &AllocationPolicy::block, py::arg("z"), py::arg("T"), py::arg("M"))
        .def_property_readonly("breakpoints", &AllocationPolicy::breakpoints)
        .def_property_readonly("levels", &AllocationPolicy::levels)
        .def_readonly("budget_slack", &AllocationPolicy::budget_slack)
        .def("level", &AllocationPolicy::level, py::arg("t"))
        .def("progress", &AllocationPolicy::progress, py::arg("t"));

    m.def("front_loading_switch", &front_loading_switch, py::arg("d"), py::arg("budget"));
    m.def("back_loading_switch", [](const DurationModel& d, const BudgetSpec& b) {
        return back_loading_switch(d, b).t_star;
    }, py::arg("d"), py::arg("budget"));
    m.def("delayed_block", &delayed_block, py::arg("d"), py::arg("budget"), py::arg("z"));
    m.def("blend", &blend, py::arg("a"), py::arg("b"), py::arg("lam"));
    m.def("time_average_loss", [](const AllocationPolicy& p, const LossCurve& g, const DurationModel& d) {
        return time_average_loss(p, g, d);
    }, py::arg("policy"), py::arg("g"), py::arg("d"));
    m.def("cost_rate", &cost_rate, py::arg("policy"), py::arg("d"), py::arg("sigma_e"));
    m.def("pmp_verify", [](const AllocationPolicy& p, const LossCurve& g, const DurationModel& d,
                           const BudgetSpec& b) { return pmp_dict(pmp_verify(p, g, d, b)); },
          py::arg("policy"), py::arg("g"), py::arg("d"), py::arg("budget"));

    py::class_<DeploymentSchedule>(m, "DeploymentSchedule")
        .def(py::init<std::vector<double>>(), py::arg("offsets"))
        .def_static("from_gaps", &DeploymentSchedule::from_gaps, py::arg("gaps"))
        .def_static("periodic", &DeploymentSchedule::periodic, py::arg("d"), py::arg("period"))
        .def_property_readonly("offsets", &DeploymentSchedule::offsets)
        .def_property_readonly("count", &DeploymentSchedule::count)
        .def("gaps", &DeploymentSchedule::gaps)
        .def("__repr__", &DeploymentSchedule::to_text);

    py::class_<RandomizedSchedule>(m, "RandomizedSchedule")
        .def_readonly("schedule_low", &RandomizedSchedule::schedule_low)
        .def_readonly("schedule_high", &RandomizedSchedule::schedule_high)
        .def_readonly("gamma", &RandomizedSchedule::gamma)
        .def_readonly("n_low", &RandomizedSchedule::n_low)
        .def_readonly("target_count", &RandomizedSchedule::target_count)
        .def("mixture_count", &RandomizedSchedule::mixture_count)
        .def("mixture_loss", &RandomizedSchedule::mixture_loss);

    m.def("client_time_average_loss", &client_time_average_loss, py::arg("schedule"), py::arg("g"), py::arg("d"));
    m.def("effective_count", &effective_count, py::arg("schedule"), py::arg("d"));
    m.def("effective_rate", &effective_rate, py::arg("schedule"), py::arg("d"));
    m.def("kkt_residuals", [](const DeploymentSchedule& s, const LossCurve& g, const DurationModel& d, double nu) {
        return kkt_residuals(s, g, d, nu).residuals;
    }, py::arg("schedule"), py::arg("g"), py::arg("d"), py::arg("nu") = 0.0);
    m.def("solve_fixed_n", &solve_fixed_n, py::arg("d"), py::arg("g"), py::arg("n"));
    m.def("chain_exponential", &chain_exponential, py::arg("beta"), py::arg("lam"), py::arg("n"));
    m.def("randomize_to_rate",
          py::overload_cast<const DurationModel&, const LossCurve&, double>(&randomize_to_rate),
          py::arg("d"), py::arg("g"), py::arg("r_D"));
    m.def("periodic_for_rate", &periodic_for_rate, py::arg("d"), py::arg("r_D"));

    // Experiments return the same CSV/JSON text the CLI writes; keyword
    // arguments use the config-file keys (dist, loss, budget, rate_grid, ...).
    m.def("alloc_sweep", [](const py::kwargs& kw) {
        const auto cfg = config_from_kwargs("alloc-sweep", kw);
        const auto budgets = cfg.budgets.empty() ? default_budget_grid(cfg.sigma_e, cfg.M) : cfg.budgets;
        return run_alloc_sweep(parse_duration(cfg.dists.front()), parse_loss(cfg.loss), budgets, cfg.sigma_e, cfg.M)
            .to_csv();
    });
    m.def("delay_sweep", [](const py::kwargs& kw) {
        const auto cfg = config_from_kwargs("delay-sweep", kw);
        const auto delays = cfg.delays.empty() ? default_delay_grid() : cfg.delays;
        return run_delay_sweep(cfg.dists, parse_loss(cfg.loss), single_budget(cfg, 0.1), delays).to_csv();
    });
    m.def("deploy_compare", [](const py::kwargs& kw) {
        const auto cfg = config_from_kwargs("deploy-compare", kw);
        const auto rates = cfg.rates.empty() ? default_rate_grid() : cfg.rates;
        return run_deploy_compare(parse_duration(cfg.dists.front()), parse_loss(cfg.loss), rates).to_csv();
    });
    m.def("simulate_json", [](const py::kwargs& kw) {
        return run_simulate(config_from_kwargs("simulate", kw)).to_json();
    });
    m.def("verify_json", [](const py::kwargs& kw) { return run_verify(config_from_kwargs("verify", kw)); });
}
