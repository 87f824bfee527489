// netlump — network diffusion/transport simulations, aggregated ODE limits
// and empirical convergence-order sweeps. See README.md and scenarios/.

#include "CLI11.hpp"

#include "netlump/diffusion.hpp"
#include "netlump/lumping.hpp"
#include "netlump/mckendrick.hpp"
#include "netlump/report.hpp"
#include "netlump/scenario.hpp"
#include "netlump/transport.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace netlump;

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;
constexpr int exit_band = 4;

const char* builtin_transport_scenario = R"(# Built-in three-edge transport demo.
kind = transport
edges = 3

[coupling]
type = matrix
B = [[-0.4, 0.3, 0.2], [0.1, -0.5, 0.3], [0.3, 0.2, -0.5]]

[initial]
edge1 = sin2pi:0.5,1.0
edge2 = offset_cos:1.0,0.3,2
edge3 = linear:0.5,1.0

[run]
eps = 0.05
t_final = 1.0
cells = 256
)";

struct CommonOptions {
    std::string scenario_path;
    double eps = 0.0;        // 0 -> first scenario value
    double t = -1.0;         // <0 -> scenario t_final
    Index cells = 0;         // 0 -> scenario value
    double dt = -1.0;        // <0 -> scenario value
    int terms = 0;           // 0 -> scenario value
    std::string emit_path;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool scenario_required) {
    auto* scenario = cmd->add_option("--scenario", opt.scenario_path, "scenario config file");
    if (scenario_required) scenario->required();
    cmd->add_option("--eps", opt.eps, "scale ratio override");
    cmd->add_option("--t", opt.t, "final time override");
    cmd->add_option("--cells", opt.cells, "grid cells per edge override");
    cmd->add_option("--dt", opt.dt, "time step override (diffusion)");
    cmd->add_option("--terms", opt.terms, "cosine-series terms override");
    cmd->add_option("--emit", opt.emit_path, "output CSV path");
}

Scenario load_scenario(const CommonOptions& opt, const char* fallback = nullptr) {
    if (!opt.scenario_path.empty()) return Scenario::load(opt.scenario_path);
    if (fallback != nullptr) return Scenario::parse(fallback);
    throw ValidationError("--scenario is required");
}

struct Resolved {
    double eps, t, dt;
    Index cells;
    int terms;
};

Resolved resolve(const Scenario& s, const CommonOptions& opt) {
    Resolved r;
    r.eps = opt.eps > 0.0 ? opt.eps : s.run.eps_list.front();
    r.t = opt.t >= 0.0 ? opt.t : s.run.t_final;
    r.cells = opt.cells > 0 ? opt.cells : s.run.cells;
    r.dt = opt.dt >= 0.0 ? opt.dt : s.run.dt;
    r.terms = opt.terms > 0 ? opt.terms : s.run.terms;
    return r;
}

int run_diffuse(const CommonOptions& opt) {
    const Scenario s = load_scenario(opt);
    const Resolved r = resolve(s, opt);
    DiffusionProblem p = s.make_diffusion(r.eps, r.cells, r.dt);
    p.t_final = r.t;
    const auto traj = solve_diffusion(p, {r.t});
    const GridFunction& u = traj.states.back();
    const Vector v = project_average(u);
    std::printf("diffusion: eps=%g t=%g cells=%ld\n", r.eps, r.t, static_cast<long>(r.cells));
    for (Index j = 0; j < v.size(); ++j)
        std::printf("  edge %ld total: %s\n", static_cast<long>(j + 1), format_float(v(j)).c_str());
    std::printf("  total mass: %s\n", format_float(v.sum()).c_str());
    if (!opt.emit_path.empty()) write_solution_csv(opt.emit_path, u);
    return exit_ok;
}

int run_transport(const CommonOptions& opt) {
    const Scenario s = load_scenario(opt, builtin_transport_scenario);
    const Resolved r = resolve(s, opt);
    const TransportProblem p = s.make_transport(r.eps, r.cells);
    const GridFunction u = transport_exact(p, r.t);
    const Vector v = transport_projected(p, r.t);
    std::printf("transport: eps=%g t=%g cells=%ld\n", r.eps, r.t, static_cast<long>(r.cells));
    for (Index j = 0; j < v.size(); ++j)
        std::printf("  edge %ld total: %s\n", static_cast<long>(j + 1), format_float(v(j)).c_str());
    std::printf("  total mass: %s\n", format_float(v.sum()).c_str());
    if (!opt.emit_path.empty()) write_solution_csv(opt.emit_path, u);
    return exit_ok;
}

int run_mckendrick(const CommonOptions& opt) {
    const Scenario s = load_scenario(opt);
    const Resolved r = resolve(s, opt);
    const StructuredPopulation p = s.make_structured(r.eps);
    const auto traj = solve_structured(p, r.t, {r.t}, s.mckendrick->strang);
    const Matrix& density = traj.densities.back();
    const double da = p.da();
    std::printf("mckendrick: eps=%g t=%g patches=%ld\n", r.eps, r.t, static_cast<long>(p.patches()));
    for (Index j = 0; j < p.patches(); ++j) {
        double mass = 0.5 * da * (density(j, 0) + density(j, p.n_age));
        for (Index i = 1; i < p.n_age; ++i) mass += da * density(j, i);
        std::printf("  patch %ld population: %s\n", static_cast<long>(j + 1), format_float(mass).c_str());
    }
    if (!opt.emit_path.empty()) {
        GridFunction ages(p.patches(), p.n_age);
        ages.values() = density;
        write_solution_csv(opt.emit_path, ages, p.a_max);
    }
    return exit_ok;
}

int run_check(const std::string& path) {
    const Scenario s = Scenario::load(path);
    if (s.kind == ScenarioKind::diffusion) {
        const DiffusionCoupling c = s.diffusion_coupling();
        const auto positivity = check_diffusion_positivity(c);
        std::printf("positivity: %s\n", positivity.ok ? "ok" : "violated");
        for (const auto& v : positivity.violations)
            std::printf("  %s(%ld,%ld) = %s\n", v.block.c_str(), static_cast<long>(v.i + 1),
                        static_cast<long>(v.j + 1), format_float(v.value).c_str());
        std::printf("markov: %s\n", check_markov_conditions(c) ? "ok" : "violated");
        std::printf("kolmogorov(lumped): %s\n",
                    kolmogorov_check(lumped_markov_generator(c)) ? "ok" : "violated");
    } else if (s.kind == ScenarioKind::transport) {
        if (s.transport_t) {
            std::printf("stochastic: ok\n");
            std::printf("irreducible: %s\n", is_strongly_connected(*s.transport_t) ? "ok" : "violated");
            const Vector n = perron_vector(*s.transport_t);
            std::printf("perron:");
            for (Index j = 0; j < n.size(); ++j) std::printf(" %s", format_float(n(j)).c_str());
            std::printf("\n");
        } else {
            const Matrix& b = *s.transport_b;
            std::printf("B 1-norm: %s\n", format_float(b.cwiseAbs().colwise().sum().maxCoeff()).c_str());
            std::printf("lumped-generator kolmogorov: %s\n", kolmogorov_check(b) ? "ok" : "no");
        }
    } else {
        const StructuredPopulation p = s.make_structured(s.run.eps_list.front());
        std::printf("kolmogorov(K): ok\n");
        const Vector n = stable_distribution(p.migration);
        std::printf("stable distribution:");
        for (Index j = 0; j < n.size(); ++j) std::printf(" %s", format_float(n(j)).c_str());
        std::printf("\n");
    }
    return exit_ok;
}

int run_expand(const CommonOptions& opt, const std::string& kind) {
    const Scenario s = load_scenario(opt, kind == "transport" ? builtin_transport_scenario : nullptr);
    if (!kind.empty()) {
        const bool match = (kind == "diffusion" && s.kind == ScenarioKind::diffusion) ||
                           (kind == "transport" && s.kind == ScenarioKind::transport);
        if (!match) throw ValidationError("expand --kind does not match the scenario kind");
    }
    const Resolved r = resolve(s, opt);
    LayerExpansion parts;
    if (s.kind == ScenarioKind::diffusion) {
        parts = expansion_components(s.make_diffusion(r.eps, r.cells, r.dt), r.t, r.terms);
    } else if (s.kind == ScenarioKind::transport) {
        parts = expansion_components(s.make_transport(r.eps, r.cells), r.t);
    } else {
        throw ValidationError("expand supports diffusion and transport scenarios");
    }
    std::vector<std::pair<std::string, GridFunction>> components;
    components.emplace_back("vbar", GridFunction::from_constant(parts.vbar, r.cells));
    components.emplace_back("corrector", parts.corrector);
    components.emplace_back("layer", parts.layer);
    if (opt.emit_path.empty()) throw ValidationError("expand requires --emit");
    write_components_csv(opt.emit_path, components);
    std::printf("wrote %s (eps=%g, t=%g)\n", opt.emit_path.c_str(), r.eps, r.t);
    return exit_ok;
}

// Sup over the scenario's output times of the lumping error of the edge
// totals, in the vector 1- and sup-norms.
std::pair<double, double> projected_error(const Scenario& s, double eps, Index cells, double dt) {
    const std::vector<double> times = s.output_times();
    double worst_l1 = 0.0, worst_sup = 0.0;
    if (s.kind == ScenarioKind::diffusion) {
        DiffusionProblem p = s.make_diffusion(eps, cells, dt);
        const Matrix k = aggregated_matrix(p.coupling);
        const Vector v0 = project_average(p.u0);
        const auto traj = solve_diffusion(p, times);
        for (size_t i = 0; i < times.size(); ++i) {
            const Vector diff = project_average(traj.states[i]) -
                                matrix_exponential_apply(k, times[i], v0);
            worst_l1 = std::max(worst_l1, diff.cwiseAbs().sum());
            worst_sup = std::max(worst_sup, diff.cwiseAbs().maxCoeff());
        }
    } else if (s.kind == ScenarioKind::transport) {
        const TransportProblem p = s.make_transport(eps, cells);
        const Vector v0 = transport_projected(p, 0.0);
        for (double t : times) {
            const Vector diff =
                transport_projected(p, t) - matrix_exponential_apply(p.coupling.b, t, v0);
            worst_l1 = std::max(worst_l1, diff.cwiseAbs().sum());
            worst_sup = std::max(worst_sup, diff.cwiseAbs().maxCoeff());
        }
    } else {
        const StructuredPopulation p = s.make_structured(eps);
        const auto gap = aggregation_gap_norms(p, s.run.t_final, times, s.mckendrick->strang);
        worst_l1 = gap.l1;
        worst_sup = gap.sup;
    }
    return {worst_l1, worst_sup};
}

int run_sweep(const CommonOptions& opt, const std::string& kind, const std::string& eps_csv,
              const std::string& band_csv, unsigned jobs) {
    Scenario s = load_scenario(opt, kind == "transport" ? builtin_transport_scenario : nullptr);
    const char* kind_names[] = {"diffusion", "transport", "mckendrick"};
    if (!kind.empty() && kind != kind_names[static_cast<int>(s.kind)])
        throw ValidationError("sweep --kind does not match the scenario kind");

    std::vector<double> eps_list = s.run.eps_list;
    if (!eps_csv.empty()) {
        eps_list.clear();
        std::istringstream in(eps_csv);
        std::string token;
        while (std::getline(in, token, ','))
            eps_list.push_back(std::strtod(token.c_str(), nullptr));
        for (double e : eps_list)
            if (!(e > 0.0)) throw ValidationError("--eps: sweep values must be positive");
    }
    double band_lo = s.run.band_lo, band_hi = s.run.band_hi;
    if (!band_csv.empty()) {
        if (std::sscanf(band_csv.c_str(), "%lf,%lf", &band_lo, &band_hi) != 2 || !(band_lo < band_hi))
            throw ValidationError("--band: expected 'lo,hi' with lo < hi");
    }
    const Index cells = opt.cells > 0 ? opt.cells : s.run.cells;
    const double dt = opt.dt >= 0.0 ? opt.dt : s.run.dt;

    std::vector<double> errors_l1(eps_list.size()), errors_sup(eps_list.size());
    std::atomic<size_t> cursor{0};
    std::mutex failure_lock;
    std::exception_ptr failure;
    auto worker = [&] {
        for (size_t i = cursor.fetch_add(1); i < eps_list.size(); i = cursor.fetch_add(1)) {
            try {
                const auto [l1, sup] = projected_error(s, eps_list[i], cells, dt);
                errors_l1[i] = l1;
                errors_sup[i] = sup;
            } catch (...) {
                const std::lock_guard<std::mutex> guard(failure_lock);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned pool_size =
        std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(eps_list.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < pool_size; ++w) pool.emplace_back(worker);
    worker();
    for (auto& thread : pool) thread.join();
    if (failure) std::rethrow_exception(failure);

    // Sort jointly by decreasing eps; collection order is irrelevant.
    std::vector<size_t> order(eps_list.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return eps_list[a] > eps_list[b]; });
    std::vector<double> eps_sorted, l1_sorted, sup_sorted;
    for (size_t i : order) {
        eps_sorted.push_back(eps_list[i]);
        l1_sorted.push_back(errors_l1[i]);
        sup_sorted.push_back(errors_sup[i]);
    }

    const ConvergenceReport report = estimate_order(eps_sorted, l1_sorted, band_lo, band_hi, sup_sorted);
    for (size_t i = 0; i < eps_sorted.size(); ++i)
        std::printf("eps=%s  error_l1=%s  error_sup=%s\n", format_float(eps_sorted[i]).c_str(),
                    format_float(l1_sorted[i]).c_str(), format_float(sup_sorted[i]).c_str());
    if (report.degenerate)
        std::printf("fitted order: n/a (degenerate sweep)\n");
    else
        std::printf("fitted order: %s  band [%g, %g]  %s\n", format_float(report.fitted_order).c_str(),
                    band_lo, band_hi, report.pass ? "pass" : "FAIL");

    if (!opt.emit_path.empty()) emit_report(report, config_digest(s.raw_text), opt.emit_path);
    return (!report.degenerate && !report.pass) ? exit_band : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netlump: diffusion/transport network dynamics and their aggregated ODE limits"};
    app.require_subcommand(1);

    CommonOptions diffuse_opt, transport_opt, mck_opt, sweep_opt, expand_opt;
    std::string check_path, sweep_kind, expand_kind, sweep_eps, sweep_band;
    unsigned sweep_jobs = 1;

    add_common(app.add_subcommand("diffuse", "solve a diffusion scenario"), diffuse_opt, true);
    add_common(app.add_subcommand("transport", "evaluate a transport scenario"), transport_opt, false);
    add_common(app.add_subcommand("mckendrick", "run a structured-population scenario"), mck_opt, true);

    auto* check = app.add_subcommand("check", "structural checks of a coupling");
    check->add_option("--coupling,--scenario", check_path, "scenario config file")->required();

    auto* sweep = app.add_subcommand("sweep", "eps ladder with fitted convergence order");
    sweep->add_option("--scenario", sweep_opt.scenario_path, "scenario config file")->required();
    sweep->add_option("--kind", sweep_kind, "diffusion | transport | mckendrick");
    sweep->add_option("--eps", sweep_eps, "comma-separated eps ladder override");
    sweep->add_option("--band", sweep_band, "acceptance band lo,hi");
    sweep->add_option("--jobs", sweep_jobs, "worker threads for sweep points");
    sweep->add_option("--cells", sweep_opt.cells, "grid cells per edge override");
    sweep->add_option("--dt", sweep_opt.dt, "time step override (diffusion)");
    sweep->add_option("--emit", sweep_opt.emit_path, "report CSV path (JSON sidecar alongside)");

    auto* expand = app.add_subcommand("expand", "emit vbar, corrector and layer components");
    add_common(expand, expand_opt, false);
    expand->add_option("--kind", expand_kind, "diffusion | transport");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (app.got_subcommand("diffuse")) return run_diffuse(diffuse_opt);
        if (app.got_subcommand("transport")) return run_transport(transport_opt);
        if (app.got_subcommand("mckendrick")) return run_mckendrick(mck_opt);
        if (app.got_subcommand("check")) return run_check(check_path);
        if (app.got_subcommand("sweep")) return run_sweep(sweep_opt, sweep_kind, sweep_eps, sweep_band, sweep_jobs);
        if (app.got_subcommand("expand")) return run_expand(expand_opt, expand_kind);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_validation;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return exit_numerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_numerical;
    }
    return exit_validation;
}
