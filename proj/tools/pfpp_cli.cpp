// pfpp command-line front end: construct | simulate | verify | deconv | report

#include "pfpp/engine.hpp"
#include "pfpp/errors.hpp"
#include "pfpp/json_io.hpp"
#include "pfpp/sim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace pfpp;

namespace {

// exit codes: 0 ok, 2 config, 3 solver, 4 residual/monotonicity gate,
// 5 verification gate
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitGate = 4;
constexpr int kExitVerify = 5;

struct RunConfig {
    Json raw;
    InverseMarginal initial = InverseMarginal::from_measure(
        RiskAversionMeasure({{2.0, 1.0}}, {}, 1.0, 3.0));
    double anchor0 = 0.0;
    SolverRoute route = SolverRoute::Auto;
    AdvanceOptions advance;
    std::optional<ScenarioSpec> scenario;
    double x0 = 1.0;
    std::size_t n_paths = 1000;
    double max_failure_rate = 0.0;
    bool with_holdings = false;
    std::uint64_t seed = 0;
    fs::path out_dir = ".";
};

Json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file '" + path.string() + "'");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
    }
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file '" + path.string() + "'");
    out << content;
}

RunConfig parse_config(const fs::path& path, const std::optional<std::uint64_t>& seed_override,
                       const std::optional<double>& tol_override,
                       const std::optional<fs::path>& out_override) {
    RunConfig cfg;
    cfg.raw = load_json(path);
    const Json& j = cfg.raw;
    try {
        if (j.contains("initial_measure")) {
            cfg.initial =
                InverseMarginal::from_measure(measure_from_json(j.at("initial_measure")));
        } else if (j.contains("initial_inverse_marginal")) {
            cfg.initial = inverse_marginal_from_json(j.at("initial_inverse_marginal"));
        } else {
            throw ConfigError("config needs 'initial_measure' or 'initial_inverse_marginal'");
        }
        cfg.anchor0 = j.value("anchor0", 0.0);
        cfg.route = route_from_name(j.value("route", std::string("auto")));
        if (j.contains("deconv")) cfg.advance.deconv = deconv_config_from_json(j.at("deconv"));
        if (j.contains("tolerances")) {
            const Json& t = j.at("tolerances");
            cfg.advance.residual_tol_cmim = t.value("residual_cmim", 1e-9);
            cfg.advance.residual_tol_deconv = t.value("residual_deconv", 1e-4);
        }
        if (j.contains("gamma_min") && j.contains("gamma_max") && cfg.initial.is_cmim()) {
            const double lo = j.at("gamma_min").get<double>();
            const double hi = j.at("gamma_max").get<double>();
            const auto& m = cfg.initial.measure();
            if (lo > m.gamma_min() || hi < m.gamma_max())
                throw ConfigError("gamma bounds must bracket the measure support");
        }
        if (j.contains("scenario")) cfg.scenario = scenario_from_json(j.at("scenario"));
        cfg.x0 = j.value("x0", 1.0);
        cfg.n_paths = j.value("n_paths", std::size_t{1000});
        cfg.max_failure_rate = j.value("max_failure_rate", 0.0);
        cfg.with_holdings = j.value("with_holdings", false);
        cfg.seed = j.value("seed", 0ULL);
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    if (seed_override) cfg.seed = *seed_override;
    if (tol_override) {
        cfg.advance.residual_tol_cmim = *tol_override;
        cfg.advance.residual_tol_deconv = *tol_override;
    }
    if (out_override) cfg.out_dir = *out_override;
    if (cfg.scenario && cfg.seed != 0) cfg.scenario->seed = cfg.seed;
    cfg.advance.route = cfg.route;
    if (!(cfg.x0 > 0.0)) throw ConfigError("x0 must be positive");
    return cfg;
}

std::vector<ThetaBlock> fixed_thetas_or_throw(const RunConfig& cfg) {
    if (!cfg.scenario || !std::holds_alternative<FixedThetas>(cfg.scenario->source))
        throw ConfigError("this command needs a scenario with fixed theta blocks");
    return std::get<FixedThetas>(cfg.scenario->source).thetas;
}

int cmd_construct(const RunConfig& cfg) {
    if (cfg.route == SolverRoute::Cmim && !cfg.initial.is_cmim())
        throw ConfigError("route=cmim requires a CMIM (measure-backed) initial inverse marginal");
    PfppState state = PfppState::initial(cfg.initial, cfg.anchor0);
    std::string residual_csv = "period,route,residual\n";
    const std::vector<ThetaBlock> thetas =
        cfg.scenario ? fixed_thetas_or_throw(cfg) : std::vector<ThetaBlock>{};
    const auto y_grid = default_y_grid();
    for (const ThetaBlock& theta : thetas) {
        state = state.advance(theta, cfg.advance);
        const PeriodEntry& e = state.entries().back();
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g\n", state.period(),
                      route_name(e.route).c_str(), e.residual);
        residual_csv += buf;
        // row-level diagnostics (y, lhs, rhs, rel_err) for the period solve
        const std::size_t k = state.period();
        const ResidualReport rows =
            e.route == SolverRoute::Cmim
                ? period_residual(e.inverse_marginal.measure(),
                                  state.inverse_marginal(k - 1).measure(), e.law, y_grid)
                : convolution_residual_report(e.inverse_marginal, e.law,
                                              state.inverse_marginal(k - 1), y_grid);
        write_file(cfg.out_dir / ("residual_period_" + std::to_string(k) + ".csv"),
                   rows.to_csv());
    }
    write_file(cfg.out_dir / "state.json", state_to_json(state).dump(2) + "\n");
    write_file(cfg.out_dir / "residuals.csv", residual_csv);
    std::cout << "constructed " << state.period() << " period(s); state written to "
              << (cfg.out_dir / "state.json").string() << "\n";
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const std::optional<fs::path>& state_file) {
    if (!cfg.scenario) throw ConfigError("simulate needs a scenario");
    InverseMarginal i0 = cfg.initial;
    if (state_file) {
        const PfppState state = state_from_json(load_json(*state_file));
        i0 = state.inverse_marginal(0);
    }
    RunPathsOptions options;
    options.advance = cfg.advance;
    options.with_holdings = cfg.with_holdings;
    const auto records =
        run_paths_collect(*cfg.scenario, i0, cfg.x0, cfg.n_paths, cfg.route, options);
    std::size_t failed = 0;
    for (const auto& r : records)
        if (r.failed()) ++failed;
    const double failure_rate =
        records.empty() ? 0.0 : static_cast<double>(failed) / static_cast<double>(records.size());

    fs::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / "paths.csv");
    if (!csv) throw ConfigError("cannot write paths.csv");
    write_paths_csv(csv, *cfg.scenario, records);
    write_file(cfg.out_dir / "summary.json",
               summary_to_json(summarize(records, cfg.x0)).dump(2) + "\n");
    std::cout << "simulated " << records.size() << " paths (" << failed << " failed)\n";
    if (failure_rate > cfg.max_failure_rate) {
        std::cerr << "error: path failure rate " << failure_rate << " exceeds threshold\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const fs::path& state_file) {
    const PfppState state = state_from_json(load_json(state_file));
    const Json& j = cfg.raw.contains("verify") ? cfg.raw.at("verify") : Json::object();
    const double tol_budget = j.value("budget_tol", 1e-9);
    const double tol_budget_deconv = j.value("budget_tol_deconv", 1e-4);
    const double tol_martingale = j.value("martingale_tol", 1e-7);
    const double tol_martingale_deconv = j.value("martingale_tol_deconv", 1e-4);
    const std::size_t n_pert = j.value("n_perturbations", std::size_t{100});

    const auto x_grid = default_x_grid();
    const auto y_grid = default_y_grid();
    std::string report_csv = "period,check,value,tolerance,pass\n";
    std::string first_failure;
    std::string residual_csv = "period,route,residual\n";

    for (std::size_t k = 1; k <= state.period(); ++k) {
        const bool cmim_route = state.entries()[k - 1].route == SolverRoute::Cmim;
        const double bt = cmim_route ? tol_budget : tol_budget_deconv;
        const double mt = cmim_route ? tol_martingale : tol_martingale_deconv;

        write_file(cfg.out_dir / ("utility_period_" + std::to_string(k) + ".csv"),
                   reconstruct_utility(state, k, x_grid).to_csv());
        const double budget = verify_budget(state, k, y_grid);
        const double martingale = verify_martingale(state, k, x_grid);
        RngStream rng = RngStream::keyed(cfg.seed, 1000 + k, 0);
        const bool super = verify_supermartingale(state, k, 1.0, n_pert, rng);

        char buf[160];
        std::snprintf(buf, sizeof(buf), "%zu,budget,%.17g,%.3g,%d\n", k, budget, bt,
                      budget <= bt);
        report_csv += buf;
        std::snprintf(buf, sizeof(buf), "%zu,martingale,%.17g,%.3g,%d\n", k, martingale, mt,
                      martingale <= mt);
        report_csv += buf;
        std::snprintf(buf, sizeof(buf), "%zu,supermartingale,%d,1,%d\n", k, super ? 1 : 0,
                      super ? 1 : 0);
        report_csv += buf;
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g\n", k,
                      route_name(state.entries()[k - 1].route).c_str(),
                      state.entries()[k - 1].residual);
        residual_csv += buf;

        if (first_failure.empty()) {
            if (budget > bt)
                first_failure = "budget (period " + std::to_string(k) + ")";
            else if (martingale > mt)
                first_failure = "martingale (period " + std::to_string(k) + ")";
            else if (!super)
                first_failure = "supermartingale (period " + std::to_string(k) + ")";
        }
    }
    write_file(cfg.out_dir / "verification.csv", report_csv);
    write_file(cfg.out_dir / "residuals.csv", residual_csv);
    if (!first_failure.empty()) {
        std::cerr << "verification failed: " << first_failure << "\n";
        return kExitVerify;
    }
    std::cout << "verification passed for " << state.period() << " period(s)\n";
    return kExitOk;
}

int cmd_deconv(const RunConfig& cfg) {
    const std::vector<ThetaBlock> thetas = fixed_thetas_or_throw(cfg);
    if (thetas.size() != 1) throw ConfigError("deconv expects exactly one theta block");
    DeconvConfig dcfg = cfg.advance.deconv;
    if (dcfg.gamma1 <= 0.0 && cfg.initial.is_cmim()) {
        dcfg.gamma1 = cfg.initial.measure().gamma_min();
        dcfg.gamma2 = cfg.initial.measure().gamma_max();
    }
    const KernelLaw law = kernel_from_theta(thetas[0]);
    SpectrumDump dump;
    const DeconvSolution sol = deconv_solve(cfg.initial, law, dcfg, &dump);
    const double residual =
        convolution_residual(sol.i1, law, cfg.initial, default_y_grid());

    const auto& g = sol.i1.grid();
    std::string grid_csv = "t,value\n";
    char buf[96];
    for (std::size_t i = 0; i < g.t.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", g.t[i], g.j[i]);
        grid_csv += buf;
    }
    write_file(cfg.out_dir / "solution.csv", grid_csv);
    write_file(cfg.out_dir / "spectrum.csv", dump.to_csv());
    Json report{{"residual", residual},
                {"zeroed_frequencies", sol.report_1.zeroed_total + sol.report_2.zeroed_total},
                {"ill_posed_warning",
                 sol.report_1.ill_posed_warning || sol.report_2.ill_posed_warning},
                {"offending_xi_gamma1", sol.report_1.offending_xi},
                {"offending_xi_gamma2", sol.report_2.offending_xi}};
    write_file(cfg.out_dir / "deconv_report.json", report.dump(2) + "\n");
    if (sol.report_1.ill_posed_warning || sol.report_2.ill_posed_warning)
        std::cerr << "warning: kernel spectrum has near-zeros inside the band; "
                     "the solution may not be unique in this class\n";
    std::cout << "deconv residual " << residual << "\n";
    return kExitOk;
}

int cmd_report(const RunConfig& cfg, const fs::path& paths_csv) {
    std::ifstream in(paths_csv);
    if (!in) throw ConfigError("cannot open paths file '" + paths_csv.string() + "'");
    std::string header;
    std::getline(in, header);
    std::vector<PathRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t p1 = line.find(',');
        std::size_t p2 = line.find(',', p1 + 1);
        std::size_t p3 = line.find(',', p2 + 1);
        std::size_t p4 = line.find(',', p3 + 1);
        if (p4 == std::string::npos) throw ConfigError("malformed paths CSV row: " + line);
        const std::size_t path = std::stoul(line.substr(0, p1));
        const std::size_t period = std::stoul(line.substr(p1 + 1, p2 - p1 - 1));
        const double rho = std::stod(line.substr(p3 + 1, p4 - p3 - 1));
        const double wealth = std::stod(line.substr(p4 + 1));
        while (records.size() <= path) {
            records.push_back(PathRecord{});
            records.back().index = records.size() - 1;
        }
        auto& periods = records[path].periods;
        if (periods.size() + 1 != period)
            throw ConfigError("paths CSV periods out of order for path " + std::to_string(path));
        periods.push_back(PeriodOutcome{rho, wealth, {}});
    }
    write_file(cfg.out_dir / "summary.json",
               summary_to_json(summarize(records, cfg.x0)).dump(2) + "\n");
    std::cout << "summarized " << records.size() << " paths\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forward performance process construction, simulation and verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string state_path;
    std::string out_dir;
    std::string paths_file;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;

    auto add_common = [&](CLI::App* cmd, bool need_config) {
        auto* opt = cmd->add_option("--config", config_path, "run configuration JSON");
        if (need_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "seed override");
        cmd->add_option("--tolerance", tolerance, "residual tolerance override");
    };

    CLI::App* construct = app.add_subcommand("construct", "solve the forward chain period by period");
    add_common(construct, true);
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo optimal wealth paths");
    add_common(simulate, true);
    simulate->add_option("--state", state_path, "state JSON from construct");
    CLI::App* verify = app.add_subcommand("verify", "run the dynamic-programming checks");
    add_common(verify, true);
    verify->add_option("--state", state_path, "state JSON from construct")->required();
    CLI::App* deconv = app.add_subcommand("deconv", "single-period Fourier deconvolution solve");
    add_common(deconv, true);
    CLI::App* report = app.add_subcommand("report", "aggregate an existing paths CSV");
    add_common(report, true);
    report->add_option("--paths", paths_file, "paths CSV from simulate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        std::optional<fs::path> out_override;
        if (!out_dir.empty()) out_override = fs::path(out_dir);
        const RunConfig cfg = parse_config(config_path, seed, tolerance, out_override);
        if (construct->parsed()) return cmd_construct(cfg);
        if (simulate->parsed())
            return cmd_simulate(cfg, state_path.empty()
                                         ? std::nullopt
                                         : std::optional<fs::path>(state_path));
        if (verify->parsed()) return cmd_verify(cfg, state_path);
        if (deconv->parsed()) return cmd_deconv(cfg);
        if (report->parsed()) return cmd_report(cfg, paths_file);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapacityError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConstructionFailedError& e) {
        std::cerr << "residual gate: " << e.what() << "\n";
        return kExitGate;
    } catch (const SolutionRejectedError& e) {
        std::cerr << "solution rejected: " << e.what() << "\n";
        return kExitGate;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitConfig;
}
