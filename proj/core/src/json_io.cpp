#include "pfpp/json_io.hpp"

#include "pfpp/errors.hpp"

namespace pfpp {

namespace {

double get_num(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw ValidationError(std::string("missing or non-numeric field '") + key + "'");
    return j[key].get<double>();
}

} // namespace

Json measure_to_json(const RiskAversionMeasure& m) {
    Json atoms = Json::array();
    for (const Atom& a : m.atoms()) atoms.push_back({{"gamma", a.gamma}, {"weight", a.weight}});
    Json cells = Json::array();
    for (const DensityCell& c : m.cells())
        cells.push_back({{"lo", c.lo}, {"hi", c.hi}, {"level", c.level}});
    return Json{{"atoms", atoms},
                {"cells", cells},
                {"gamma_min", m.gamma_min()},
                {"gamma_max", m.gamma_max()}};
}

RiskAversionMeasure measure_from_json(const Json& j) {
    std::vector<Atom> atoms;
    std::vector<DensityCell> cells;
    if (j.contains("atoms"))
        for (const Json& a : j["atoms"]) atoms.push_back({get_num(a, "gamma"), get_num(a, "weight")});
    if (j.contains("cells"))
        for (const Json& c : j["cells"])
            cells.push_back({get_num(c, "lo"), get_num(c, "hi"), get_num(c, "level")});
    return RiskAversionMeasure(std::move(atoms), std::move(cells), get_num(j, "gamma_min"),
                               get_num(j, "gamma_max"));
}

Json theta_to_json(const ThetaBlock& theta) {
    if (std::holds_alternative<BinomialPeriodParams>(theta)) {
        Json steps = Json::array();
        for (const BinomialStep& s : std::get<BinomialPeriodParams>(theta).steps)
            steps.push_back({{"u", s.u}, {"d", s.d}, {"p", s.p}});
        return Json{{"type", "binomial"}, {"steps", steps}};
    }
    const auto& bs = std::get<BsPeriodParams>(theta);
    Json out{{"type", "bs"}, {"lambda", bs.lambda}};
    if (bs.sigma) out["sigma"] = *bs.sigma;
    return out;
}

ThetaBlock theta_from_json(const Json& j) {
    if (!j.contains("type") || !j["type"].is_string())
        throw ValidationError("theta block needs a 'type'");
    const std::string type = j["type"].get<std::string>();
    if (type == "binomial") {
        BinomialPeriodParams params;
        if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty())
            throw ValidationError("binomial theta needs a nonempty 'steps' array");
        for (const Json& s : j["steps"])
            params.steps.push_back({get_num(s, "u"), get_num(s, "d"), get_num(s, "p")});
        return params;
    }
    if (type == "bs") {
        BsPeriodParams params;
        if (!j.contains("lambda") || !j["lambda"].is_array())
            throw ValidationError("bs theta needs a 'lambda' array");
        for (const Json& l : j["lambda"]) params.lambda.push_back(l.get<double>());
        if (j.contains("sigma"))
            params.sigma = j["sigma"].get<std::vector<std::vector<double>>>();
        return params;
    }
    throw ValidationError("unknown theta type '" + type + "'");
}

Json inverse_marginal_to_json(const InverseMarginal& im) {
    if (im.is_cmim()) return Json{{"kind", "cmim"}, {"measure", measure_to_json(im.measure())}};
    const auto& g = im.grid();
    return Json{{"kind", "grid"},
                {"t", g.t},
                {"j", g.j},
                {"gamma1", g.gamma1},
                {"gamma2", g.gamma2}};
}

InverseMarginal inverse_marginal_from_json(const Json& j) {
    if (!j.contains("kind")) throw ValidationError("inverse marginal needs a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "cmim") return InverseMarginal::from_measure(measure_from_json(j.at("measure")));
    if (kind == "grid")
        return InverseMarginal::from_grid(j.at("t").get<std::vector<double>>(),
                                          j.at("j").get<std::vector<double>>(),
                                          get_num(j, "gamma1"), get_num(j, "gamma2"));
    throw ValidationError("unknown inverse marginal kind '" + kind + "'");
}

Json scenario_to_json(const ScenarioSpec& spec) {
    Json source;
    if (std::holds_alternative<FixedThetas>(spec.source)) {
        Json thetas = Json::array();
        for (const ThetaBlock& t : std::get<FixedThetas>(spec.source).thetas)
            thetas.push_back(theta_to_json(t));
        source = Json{{"kind", "fixed"}, {"thetas", thetas}};
    } else if (std::holds_alternative<IidBinomialSampler>(spec.source)) {
        const auto& s = std::get<IidBinomialSampler>(spec.source);
        source = Json{{"kind", "iid_binomial"}, {"n_steps", s.n_steps}, {"u_lo", s.u_lo},
                      {"u_hi", s.u_hi},         {"d_lo", s.d_lo},       {"d_hi", s.d_hi},
                      {"p_lo", s.p_lo},         {"p_hi", s.p_hi}};
    } else {
        const auto& s = std::get<IidBsSampler>(spec.source);
        source = Json{{"kind", "iid_bs"},
                      {"dim", s.dim},
                      {"lambda_lo", s.lambda_lo},
                      {"lambda_hi", s.lambda_hi}};
    }
    return Json{{"horizon", spec.horizon}, {"seed", spec.seed}, {"source", source}};
}

ScenarioSpec scenario_from_json(const Json& j) {
    ScenarioSpec spec;
    spec.horizon = j.at("horizon").get<std::size_t>();
    spec.seed = j.value("seed", 0ULL);
    const Json& src = j.at("source");
    const std::string kind = src.at("kind").get<std::string>();
    if (kind == "fixed") {
        FixedThetas fixed;
        for (const Json& t : src.at("thetas")) fixed.thetas.push_back(theta_from_json(t));
        spec.source = std::move(fixed);
    } else if (kind == "iid_binomial") {
        IidBinomialSampler s;
        s.n_steps = src.value("n_steps", std::size_t{1});
        s.u_lo = src.value("u_lo", s.u_lo);
        s.u_hi = src.value("u_hi", s.u_hi);
        s.d_lo = src.value("d_lo", s.d_lo);
        s.d_hi = src.value("d_hi", s.d_hi);
        s.p_lo = src.value("p_lo", s.p_lo);
        s.p_hi = src.value("p_hi", s.p_hi);
        spec.source = s;
    } else if (kind == "iid_bs") {
        IidBsSampler s;
        s.dim = src.value("dim", std::size_t{1});
        s.lambda_lo = src.value("lambda_lo", s.lambda_lo);
        s.lambda_hi = src.value("lambda_hi", s.lambda_hi);
        spec.source = s;
    } else {
        throw ValidationError("unknown scenario source kind '" + kind + "'");
    }
    spec.validate();
    return spec;
}

Json state_to_json(const PfppState& state) {
    Json periods = Json::array();
    for (const PeriodEntry& e : state.entries()) {
        periods.push_back({{"theta", theta_to_json(e.theta)},
                           {"route", route_name(e.route)},
                           {"inverse_marginal", inverse_marginal_to_json(e.inverse_marginal)},
                           {"anchor", e.anchor},
                           {"residual", e.residual}});
    }
    return Json{{"period", state.period()},
                {"anchor0", state.anchor(0)},
                {"i0", inverse_marginal_to_json(state.inverse_marginal(0))},
                {"periods", periods}};
}

PfppState state_from_json(const Json& j) {
    InverseMarginal i0 = inverse_marginal_from_json(j.at("i0"));
    const double a0 = get_num(j, "anchor0");
    std::vector<PeriodEntry> entries;
    for (const Json& p : j.at("periods")) {
        ThetaBlock theta = theta_from_json(p.at("theta"));
        KernelLaw law = kernel_from_theta(theta);
        entries.push_back(PeriodEntry{std::move(theta), std::move(law),
                                      route_from_name(p.at("route").get<std::string>()),
                                      inverse_marginal_from_json(p.at("inverse_marginal")),
                                      get_num(p, "anchor"), get_num(p, "residual")});
    }
    return PfppState::from_parts(std::move(i0), a0, std::move(entries));
}

Json deconv_config_to_json(const DeconvConfig& cfg) {
    return Json{{"half_width", cfg.half_width},     {"n_points", cfg.n_points},
                {"gamma1", cfg.gamma1},             {"gamma2", cfg.gamma2},
                {"fourier_floor", cfg.fourier_floor}, {"taper_fraction", cfg.taper_fraction},
                {"split_width", cfg.split_width},   {"min_taper_width", cfg.min_taper_width}};
}

DeconvConfig deconv_config_from_json(const Json& j) {
    DeconvConfig cfg;
    cfg.half_width = j.value("half_width", cfg.half_width);
    cfg.n_points = j.value("n_points", cfg.n_points);
    cfg.gamma1 = j.value("gamma1", cfg.gamma1);
    cfg.gamma2 = j.value("gamma2", cfg.gamma2);
    cfg.fourier_floor = j.value("fourier_floor", cfg.fourier_floor);
    cfg.taper_fraction = j.value("taper_fraction", cfg.taper_fraction);
    cfg.split_width = j.value("split_width", cfg.split_width);
    cfg.min_taper_width = j.value("min_taper_width", cfg.min_taper_width);
    return cfg;
}

Json summary_to_json(const SummaryReport& report) {
    Json periods = Json::array();
    for (const PeriodStats& s : report.periods) {
        periods.push_back({{"mean", s.mean},
                           {"stddev", s.stddev},
                           {"q05", s.q05},
                           {"q25", s.q25},
                           {"q50", s.q50},
                           {"q75", s.q75},
                           {"q95", s.q95},
                           {"budget_residual_mean", s.budget_residual_mean}});
    }
    return Json{{"n_paths", report.n_paths},
                {"n_failed", report.n_failed},
                {"x0", report.x0},
                {"periods", periods}};
}

} // namespace pfpp
