#include "welsch/experiment_config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "welsch/errors.hpp"
#include "welsch/version.hpp"

namespace welsch {

namespace {

using nlohmann::json;

[[noreturn]] void fail_key(const std::string& key, const std::string& what) {
    throw ConfigError("config: key '" + key + "': " + what);
}

double get_number(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail_key(key, "expected a number");
    return j.at(key).get<double>();
}

long get_integer(const json& j, const std::string& key, long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) fail_key(key, "expected an integer");
    return j.at(key).get<long>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) fail_key(key, "expected a boolean");
    return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) fail_key(key, "expected a string");
    return j.at(key).get<std::string>();
}

json loss_to_json(const LossSpec& loss) {
    json j;
    j["family"] = to_string(loss.family);
    switch (loss.family) {
        case LossFamily::welsch: j["tau"] = loss.tau; break;
        case LossFamily::huber: j["gamma"] = loss.gamma; break;
        case LossFamily::tukey: j["c"] = loss.c; break;
        case LossFamily::hampel:
            j["a"] = loss.a;
            j["b"] = loss.b;
            j["r"] = loss.r;
            break;
        case LossFamily::pinball: j["q"] = loss.q; break;
        default: break;
    }
    return j;
}

LossSpec loss_from_json(const json& j, const std::string& context) {
    LossSpec loss;
    const std::string family = get_string(j, "family", "");
    if (family.empty()) fail_key(context + ".family", "required");
    loss.family = loss_family_from_string(family);
    loss.tau = get_number(j, "tau", loss.tau);
    loss.gamma = get_number(j, "gamma", loss.gamma);
    loss.c = get_number(j, "c", loss.c);
    loss.a = get_number(j, "a", loss.a);
    loss.b = get_number(j, "b", loss.b);
    loss.r = get_number(j, "r", loss.r);
    loss.q = get_number(j, "q", loss.q);
    loss.validate();
    return loss;
}

json estimator_to_json(const EstimatorSpec& est) {
    json j;
    j["name"] = est.name;
    j["loss"] = loss_to_json(est.loss);
    switch (est.tau_policy) {
        case EstimatorSpec::TauPolicy::fixed: j["tau_policy"] = "fixed"; break;
        case EstimatorSpec::TauPolicy::prop2: j["tau_policy"] = "prop2"; break;
        case EstimatorSpec::TauPolicy::debias: j["tau_policy"] = "debias"; break;
        case EstimatorSpec::TauPolicy::asymptotic: j["tau_policy"] = "asymptotic"; break;
    }
    j["delta"] = est.delta;
    j["two_stage"] = est.two_stage;
    return j;
}

EstimatorSpec estimator_from_json(const json& j, std::size_t index) {
    const std::string context = "estimators[" + std::to_string(index) + "]";
    EstimatorSpec est;
    est.name = get_string(j, "name", "");
    if (est.name.empty()) fail_key(context + ".name", "required");
    if (!j.contains("loss") || !j.at("loss").is_object()) {
        fail_key(context + ".loss", "expected an object");
    }
    est.loss = loss_from_json(j.at("loss"), context + ".loss");
    const std::string policy = get_string(j, "tau_policy", "fixed");
    if (policy == "fixed") est.tau_policy = EstimatorSpec::TauPolicy::fixed;
    else if (policy == "prop2") est.tau_policy = EstimatorSpec::TauPolicy::prop2;
    else if (policy == "debias") est.tau_policy = EstimatorSpec::TauPolicy::debias;
    else if (policy == "asymptotic") est.tau_policy = EstimatorSpec::TauPolicy::asymptotic;
    else fail_key(context + ".tau_policy", "one of fixed|prop2|debias|asymptotic");
    est.delta = get_number(j, "delta", est.delta);
    est.two_stage = get_bool(j, "two_stage", est.two_stage);
    return est;
}

json optimizer_to_json(const OptimizerConfig& opt) {
    json j;
    j["method"] = opt.method == OptimMethod::lbfgs ? "lbfgs" : "gradient_descent";
    j["memory"] = opt.memory;
    j["max_iters"] = opt.max_iters;
    j["grad_tol"] = opt.grad_tol;
    j["step_tol"] = opt.step_tol;
    j["wolfe_c1"] = opt.wolfe_c1;
    j["wolfe_c2"] = opt.wolfe_c2;
    j["gd_step"] = opt.gd_step;
    return j;
}

OptimizerConfig optimizer_from_json(const json& j, OptimizerConfig opt) {
    const std::string method = get_string(j, "method", "");
    if (method == "lbfgs") opt.method = OptimMethod::lbfgs;
    else if (method == "gradient_descent") opt.method = OptimMethod::gradient_descent;
    else if (!method.empty()) fail_key("fit.optimizer.method", "one of lbfgs|gradient_descent");
    opt.memory = static_cast<int>(get_integer(j, "memory", opt.memory));
    opt.max_iters = static_cast<int>(get_integer(j, "max_iters", opt.max_iters));
    opt.grad_tol = get_number(j, "grad_tol", opt.grad_tol);
    opt.step_tol = get_number(j, "step_tol", opt.step_tol);
    opt.wolfe_c1 = get_number(j, "wolfe_c1", opt.wolfe_c1);
    opt.wolfe_c2 = get_number(j, "wolfe_c2", opt.wolfe_c2);
    opt.gd_step = get_number(j, "gd_step", opt.gd_step);
    opt.validate();
    return opt;
}

json fit_to_json(const FitConfig& cfg) {
    json j;
    j["algorithm1_c"] = cfg.algorithm1_c;
    j["lad_max_iters"] = cfg.lad_max_iters;
    j["scale_mode"] =
        cfg.scale_mode == ScaleMode::fixed_unit ? "fixed_unit" : "mad_of_lad_residuals";
    j["optimizer"] = optimizer_to_json(cfg.optimizer);
    return j;
}

FitConfig fit_from_json(const json& j, FitConfig cfg) {
    cfg.algorithm1_c = get_number(j, "algorithm1_c", cfg.algorithm1_c);
    cfg.lad_max_iters = static_cast<int>(get_integer(j, "lad_max_iters", cfg.lad_max_iters));
    const std::string mode = get_string(j, "scale_mode", "");
    if (mode == "fixed_unit") cfg.scale_mode = ScaleMode::fixed_unit;
    else if (mode == "mad_of_lad_residuals") cfg.scale_mode = ScaleMode::mad_of_lad_residuals;
    else if (!mode.empty()) fail_key("fit.scale_mode", "one of fixed_unit|mad_of_lad_residuals");
    if (j.contains("optimizer")) {
        if (!j.at("optimizer").is_object()) fail_key("fit.optimizer", "expected an object");
        cfg.optimizer = optimizer_from_json(j.at("optimizer"), cfg.optimizer);
    }
    return cfg;
}

json experiment_to_json_obj(const ExperimentSpec& spec) {
    json j;
    j["kind"] = to_string(spec.kind);
    j["ns"] = spec.ns;
    j["p"] = spec.p;
    if (spec.beta_star) {
        j["beta_star"] = std::vector<double>(spec.beta_star->data(),
                                             spec.beta_star->data() + spec.beta_star->size());
    }
    j["design"] = to_string(spec.design);
    json noise;
    noise["kind"] = to_string(spec.noise.kind);
    if (spec.noise.kind == NoiseSpec::Kind::pareto) noise["shape"] = spec.noise.pareto_shape;
    if (spec.noise.kind == NoiseSpec::Kind::student) noise["df"] = spec.noise.student_df;
    j["noise"] = noise;
    json cont;
    cont["proportion"] = spec.contamination.proportion;
    if (spec.contamination.count) cont["count"] = *spec.contamination.count;
    cont["magnitude"] = spec.contamination.magnitude;
    cont["strategy"] = to_string(spec.contamination.strategy);
    if (spec.contamination.direction) {
        cont["direction"] = std::vector<double>(
            spec.contamination.direction->data(),
            spec.contamination.direction->data() + spec.contamination.direction->size());
    }
    j["contamination"] = cont;
    if (!spec.proportion_sweep.empty()) j["proportion_sweep"] = spec.proportion_sweep;
    json ests = json::array();
    for (const EstimatorSpec& est : spec.estimators) ests.push_back(estimator_to_json(est));
    j["estimators"] = ests;
    j["replicates"] = spec.replicates;
    j["base_seed"] = spec.base_seed;
    j["trace_iterations"] = spec.trace_iterations;
    j["fit"] = fit_to_json(spec.fit_template);
    return j;
}

ExperimentSpec experiment_from_json_obj(const json& j) {
    ExperimentSpec spec;
    const std::string kind = get_string(j, "kind", "");
    if (kind.empty()) fail_key("kind", "required");
    spec.kind = experiment_kind_from_string(kind);

    if (j.contains("ns")) {
        if (!j.at("ns").is_array()) fail_key("ns", "expected an array of integers");
        spec.ns.clear();
        for (const auto& v : j.at("ns")) {
            if (!v.is_number_integer()) fail_key("ns", "expected an array of integers");
            spec.ns.push_back(v.get<long>());
        }
    } else if (j.contains("n")) {
        spec.ns = {get_integer(j, "n", 1000)};
    }
    spec.p = get_integer(j, "p", spec.p);
    if (j.contains("beta_star")) {
        if (!j.at("beta_star").is_array()) fail_key("beta_star", "expected an array of numbers");
        const auto values = j.at("beta_star").get<std::vector<double>>();
        spec.beta_star =
            Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<long>(values.size()));
    }
    const std::string design = get_string(j, "design", "gaussian_isotropic");
    if (design == "gaussian_isotropic") spec.design = DesignKind::gaussian_isotropic;
    else if (design == "rademacher") spec.design = DesignKind::rademacher;
    else fail_key("design", "one of gaussian_isotropic|rademacher");

    if (j.contains("noise")) {
        const json& noise = j.at("noise");
        if (!noise.is_object()) fail_key("noise", "expected an object");
        const std::string nk = get_string(noise, "kind", "gaussian");
        if (nk == "gaussian") spec.noise.kind = NoiseSpec::Kind::gaussian;
        else if (nk == "pareto") spec.noise.kind = NoiseSpec::Kind::pareto;
        else if (nk == "student") spec.noise.kind = NoiseSpec::Kind::student;
        else fail_key("noise.kind", "one of gaussian|pareto|student");
        spec.noise.pareto_shape = get_number(noise, "shape", spec.noise.pareto_shape);
        spec.noise.student_df = get_number(noise, "df", spec.noise.student_df);
    }

    if (j.contains("contamination")) {
        const json& cont = j.at("contamination");
        if (!cont.is_object()) fail_key("contamination", "expected an object");
        spec.contamination.proportion =
            get_number(cont, "proportion", spec.contamination.proportion);
        if (cont.contains("count")) {
            spec.contamination.count = get_integer(cont, "count", 0);
        }
        spec.contamination.magnitude = get_number(cont, "magnitude", spec.contamination.magnitude);
        const std::string strat = get_string(cont, "strategy", "random_shift");
        if (strat == "random_shift") spec.contamination.strategy = AdversaryStrategy::random_shift;
        else if (strat == "sign_aligned") spec.contamination.strategy = AdversaryStrategy::sign_aligned;
        else if (strat == "response_flip") spec.contamination.strategy = AdversaryStrategy::response_flip;
        else fail_key("contamination.strategy", "one of random_shift|sign_aligned|response_flip");
        if (cont.contains("direction")) {
            const auto values = cont.at("direction").get<std::vector<double>>();
            spec.contamination.direction =
                Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<long>(values.size()));
        }
    }

    if (j.contains("proportion_sweep")) {
        spec.proportion_sweep = j.at("proportion_sweep").get<std::vector<double>>();
    }
    if (j.contains("estimators")) {
        if (!j.at("estimators").is_array()) fail_key("estimators", "expected an array");
        spec.estimators.clear();
        std::size_t index = 0;
        for (const auto& e : j.at("estimators")) {
            spec.estimators.push_back(estimator_from_json(e, index++));
        }
    }
    spec.replicates = get_integer(j, "replicates", spec.replicates);
    if (j.contains("base_seed")) {
        if (!j.at("base_seed").is_number_integer() && !j.at("base_seed").is_number_unsigned()) {
            fail_key("base_seed", "expected an integer");
        }
        spec.base_seed = j.at("base_seed").get<std::uint64_t>();
    }
    spec.trace_iterations =
        static_cast<int>(get_integer(j, "trace_iterations", spec.trace_iterations));
    if (j.contains("fit")) {
        if (!j.at("fit").is_object()) fail_key("fit", "expected an object");
        spec.fit_template = fit_from_json(j.at("fit"), spec.fit_template);
    }
    spec.validate();
    return spec;
}

EstimatorSpec make_estimator(const std::string& name, LossSpec loss,
                             EstimatorSpec::TauPolicy policy = EstimatorSpec::TauPolicy::fixed,
                             bool two_stage = true) {
    EstimatorSpec est;
    est.name = name;
    est.loss = std::move(loss);
    est.tau_policy = policy;
    est.two_stage = two_stage;
    return est;
}

}  // namespace

ExperimentSpec experiment_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    return experiment_from_json_obj(j);
}

std::string experiment_to_json_text(const ExperimentSpec& spec, int indent) {
    return experiment_to_json_obj(spec).dump(indent);
}

ExperimentSpec preset_experiment(const std::string& name) {
    ExperimentSpec spec;
    spec.base_seed = 1;
    spec.fit_template.loss = LossSpec::welsch(0.1);

    if (name == "fig1a-desk") {
        spec.kind = ExperimentKind::bias_curve;
        spec.ns = {1000};
        spec.p = 5;
        spec.noise.kind = NoiseSpec::Kind::pareto;
        spec.contamination.strategy = AdversaryStrategy::sign_aligned;
        spec.contamination.magnitude = 100.0;
        spec.proportion_sweep = {0.02, 0.04, 0.06, 0.08, 0.10};
        spec.replicates = 500;
        spec.fit_template.algorithm1_c = 0.3;
        spec.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::prop2),
            make_estimator("huber", LossSpec::huber(1.0)),
            make_estimator("quantile_0.5", LossSpec::pinball(0.5)),
        };
        return spec;
    }
    if (name == "fig1b-desk") {
        ExperimentSpec base = preset_experiment("fig1a-desk");
        base.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::prop2),
            make_estimator("tukey", LossSpec::tukey()),
            make_estimator("hampel", LossSpec::hampel()),
        };
        return base;
    }
    if (name == "fig4-desk") {
        // symmetric gross outliers: both estimators' traces decay and the
        // redescender settles lower, matching the reference picture
        spec.kind = ExperimentKind::convergence_trace;
        spec.ns = {1000};
        spec.p = 16;
        spec.noise.kind = NoiseSpec::Kind::pareto;
        spec.contamination.strategy = AdversaryStrategy::random_shift;
        spec.contamination.proportion = 0.10;
        spec.contamination.magnitude = 100.0;
        spec.replicates = 50;
        spec.trace_iterations = 150;
        spec.fit_template.algorithm1_c = 0.3;
        spec.fit_template.optimizer.gd_step = 0.5;
        spec.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::prop2),
            make_estimator("huber", LossSpec::huber(1.0)),
        };
        return spec;
    }
    if (name == "fig5-desk") {
        spec.kind = ExperimentKind::mse_distribution;
        spec.ns = {1000};
        spec.p = 5;
        spec.noise.kind = NoiseSpec::Kind::pareto;
        spec.contamination.strategy = AdversaryStrategy::sign_aligned;
        spec.contamination.proportion = 0.10;
        spec.contamination.magnitude = 100.0;
        spec.replicates = 1000;
        spec.fit_template.algorithm1_c = 0.3;
        spec.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::prop2),
            make_estimator("huber", LossSpec::huber(1.0)),
        };
        return spec;
    }
    if (name == "fig7-desk") {
        ExperimentSpec base = preset_experiment("fig5-desk");
        base.contamination.proportion = 0.20;
        base.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::prop2),
            make_estimator("tukey", LossSpec::tukey()),
            make_estimator("hampel", LossSpec::hampel()),
        };
        return base;
    }
    if (name == "rate-desk") {
        spec.kind = ExperimentKind::rate_curve;
        spec.ns = {500, 2000};
        spec.p = 5;
        spec.replicates = 200;
        spec.fit_template.algorithm1_c = 0.9;
        spec.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::prop2),
        };
        return spec;
    }
    if (name == "normality-desk") {
        spec.kind = ExperimentKind::normality;
        spec.ns = {5000};
        spec.p = 3;
        spec.replicates = 1000;
        spec.estimators = {
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::asymptotic),
        };
        return spec;
    }
    if (name == "debias-desk") {
        spec.kind = ExperimentKind::mse_distribution;
        spec.ns = {1000};
        spec.p = 5;
        spec.noise.kind = NoiseSpec::Kind::pareto;
        spec.contamination.strategy = AdversaryStrategy::sign_aligned;
        spec.contamination.proportion = 0.10;
        spec.contamination.magnitude = 1000.0;
        spec.replicates = 200;
        spec.fit_template.algorithm1_c = 0.3;
        EstimatorSpec welsch_est =
            make_estimator("welsch", LossSpec::welsch(0.1), EstimatorSpec::TauPolicy::debias);
        welsch_est.delta = 0.01;
        spec.estimators = {welsch_est};
        return spec;
    }
    throw ConfigError("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
    return {"fig1a-desk", "fig1b-desk", "fig4-desk", "fig5-desk",
            "fig7-desk",  "rate-desk",  "normality-desk", "debias-desk"};
}

ExperimentSpec load_experiment_spec(const std::string& preset,
                                    const std::optional<std::string>& config_path) {
    json merged = experiment_to_json_obj(preset_experiment(preset));
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw IoError("config: cannot open " + *config_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        json overrides;
        try {
            overrides = json::parse(buffer.str());
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: invalid JSON in ") + *config_path + ": " +
                              e.what());
        }
        if (!overrides.is_object()) {
            throw ConfigError("config: top level of " + *config_path + " must be an object");
        }
        merged.merge_patch(overrides);
    }
    return experiment_from_json_obj(merged);
}

void write_provenance(const std::string& data_path, const std::string& resolved_config_json) {
    json body;
    body["tool"] = "welsch";
    body["version"] = kVersion;
    try {
        body["config"] = json::parse(resolved_config_json);
    } catch (const json::exception&) {
        body["config"] = resolved_config_json;
    }
    const std::string path = data_path + ".provenance.json";
    std::ofstream out(path);
    if (!out) throw IoError("write_provenance: cannot open " + path);
    out << body.dump(2) << '\n';
    if (!out) throw IoError("write_provenance: failed while writing " + path);
}

}  // namespace welsch
