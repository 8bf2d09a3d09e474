#include "selfheal/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "selfheal/error.hpp"

namespace selfheal {

namespace {

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported as unknown.
class Section {
public:
    Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(path_.empty() ? "config root" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const Json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const Json* v = get(key)) {
            if (!v->is_number()) fail(where(key), "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(where(key), "expected a finite number");
        }
    }

    void integer(const std::string& key, int& out) {
        if (const Json* v = get(key)) {
            if (!v->is_number_integer()) fail(where(key), "expected an integer");
            out = v->get<int>();
        }
    }

    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (const Json* v = get(key)) {
            if (!v->is_number_unsigned()) fail(where(key), "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const Json* v = get(key)) {
            if (!v->is_boolean()) fail(where(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    std::optional<std::string> text(const std::string& key) {
        const Json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) fail(where(key), "expected a string");
        return v->get<std::string>();
    }

    std::optional<std::vector<double>> numbers(const std::string& key) {
        const Json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_array()) fail(where(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) fail(where(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::optional<Section> child(const std::string& key) {
        const Json* v = get(key);
        if (!v) return std::nullopt;
        return Section(*v, where(key));
    }

    void finish() const {
        for (const auto& item : node_.items())
            if (!seen_.contains(item.key())) fail(where(item.key()), "unknown key");
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw InvalidConfiguration("config: " + path + ": " + what);
    }

private:
    const Json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

DiagonalPattern parse_pattern(const std::string& name, const std::string& path) {
    if (name == "uniform") return DiagonalPattern::Uniform;
    if (name == "alternating") return DiagonalPattern::Alternating;
    Section::fail(path, "expected uniform or alternating, got '" + name + "'");
}

MassKind parse_mass(const std::string& name, const std::string& path) {
    if (name == "consistent") return MassKind::Consistent;
    if (name == "lumped") return MassKind::Lumped;
    Section::fail(path, "expected consistent or lumped, got '" + name + "'");
}

void read_crack(Section s, CrackSpec& crack) {
    if (s.has("beta") && s.has("beta_deg")) Section::fail(s.where("beta_deg"), "give beta or beta_deg, not both");
    s.number("beta", crack.beta);
    double deg = std::numeric_limits<double>::quiet_NaN();
    s.number("beta_deg", deg);
    if (!std::isnan(deg)) crack.beta = deg * std::numbers::pi / 180.0;
    s.number("sigma", crack.sigma);
    s.finish();
}

void read_law(Section s, MaterialLaw& law) {
    s.number("d_intact", law.d_intact);
    s.number("d_cracked", law.d_cracked);
    s.number("p", law.p);
    s.number("q", law.q);
    s.number("alpha", law.alpha);
    s.number("gamma", law.gamma);
    s.finish();
}

void read_gate(Section s, GateSpec& gate) {
    s.number("d_threshold", gate.d_threshold);
    s.number("u_critical", gate.u_critical);
    s.number("delta_u", gate.delta_u);
    s.number("epsilon", gate.epsilon);
    s.finish();
}

void read_sim_fields(Section& s, SimConfig& c) {
    s.integer("n_div", c.n_div);
    if (auto v = s.text("mesh_pattern")) c.mesh_pattern = parse_pattern(*v, s.where("mesh_pattern"));
    if (auto sub = s.child("crack")) read_crack(std::move(*sub), c.crack);
    if (auto sub = s.child("law")) read_law(std::move(*sub), c.law);
    if (auto v = s.text("model")) {
        try {
            c.model = parse_model(*v);
        } catch (const InvalidConfiguration& e) {
            Section::fail(s.where("model"), e.what());
        }
    }
    if (auto sub = s.child("gate")) read_gate(std::move(*sub), c.gate);
    s.number("dt", c.dt);
    s.number("t_max", c.t_max);
    s.number("heal_threshold", c.heal_threshold);
    s.integer("record_every", c.record_every);
    s.number("rel_tol", c.rel_tol);
    s.integer("picard_iters", c.picard_iters);
    if (auto v = s.text("transport_mass")) c.transport_mass = parse_mass(*v, s.where("transport_mass"));
    s.boolean("stop_at_threshold", c.stop_at_threshold);
}

void read_axis(Section s, GridAxis& axis) {
    s.number("lower", axis.lower);
    s.number("upper", axis.upper);
    s.number("step", axis.step);
    s.finish();
}

void read_hyper(Section s, surrogate::Hyperparameters& hp) {
    s.integer("knn_k", hp.knn_k);
    s.integer("logreg_epochs", hp.logreg_epochs);
    s.number("logreg_learning_rate", hp.logreg_learning_rate);
    s.number("svm_lambda", hp.svm_lambda);
    s.integer("svm_epochs", hp.svm_epochs);
    s.number("svm_eta0", hp.svm_eta0);
    s.integer("mlp_hidden", hp.mlp_hidden);
    s.number("mlp_dropout", hp.mlp_dropout);
    s.number("mlp_learning_rate", hp.mlp_learning_rate);
    s.integer("mlp_batch", hp.mlp_batch);
    s.integer("mlp_epochs", hp.mlp_epochs);
    s.unsigned64("seed", hp.seed);
    s.finish();
}

const char* to_string(DiagonalPattern p) { return p == DiagonalPattern::Uniform ? "uniform" : "alternating"; }
const char* to_string(MassKind m) { return m == MassKind::Consistent ? "consistent" : "lumped"; }

}  // namespace

RunConfig parse_run_config(const Json& doc) {
    RunConfig rc;
    Section root(doc, "");
    read_sim_fields(root, rc.sim);

    if (auto sub = root.child("dataset")) {
        DatasetSpec spec = DatasetSpec::desk();
        if (auto a = sub->child("sigma")) read_axis(std::move(*a), spec.sigma);
        if (auto a = sub->child("gamma")) read_axis(std::move(*a), spec.gamma);
        if (auto a = sub->child("t")) read_axis(std::move(*a), spec.t);
        sub->number("heal_threshold", spec.heal_threshold);
        if (auto b = sub->child("base")) {
            read_sim_fields(*b, spec.base);
            b->finish();
        }
        sub->finish();
        rc.dataset = spec;
    }
    if (auto sub = root.child("sweep")) {
        rc.sweep.values = sub->numbers("values");
        rc.sweep.sigmas = sub->numbers("sigmas");
        rc.sweep.gammas = sub->numbers("gammas");
        sub->finish();
    }
    if (auto sub = root.child("surrogate")) read_hyper(std::move(*sub), rc.hyper);
    if (auto v = root.numbers("snapshot_times")) rc.snapshot_times = *v;
    root.finish();

    rc.sim.validate();
    if (rc.dataset) {
        rc.dataset->base.validate();
        rc.dataset->validate();
    }
    for (double t : rc.snapshot_times)
        if (!(t >= 0.0)) Section::fail("snapshot_times", "times must be non-negative");
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration("config: cannot open '" + path.string() + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidConfiguration("config: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

Json to_json(const SimConfig& c) {
    Json j;
    j["n_div"] = c.n_div;
    j["mesh_pattern"] = to_string(c.mesh_pattern);
    j["crack"] = {{"beta", c.crack.beta}, {"sigma", c.crack.sigma}};
    j["law"] = {{"d_intact", c.law.d_intact}, {"d_cracked", c.law.d_cracked}, {"p", c.law.p},
                {"q", c.law.q},               {"alpha", c.law.alpha},         {"gamma", c.law.gamma}};
    j["model"] = to_string(c.model);
    j["gate"] = {{"d_threshold", c.gate.d_threshold},
                 {"u_critical", c.gate.u_critical},
                 {"delta_u", c.gate.delta_u},
                 {"epsilon", c.gate.epsilon}};
    j["dt"] = c.dt;
    j["t_max"] = c.t_max;
    j["heal_threshold"] = c.heal_threshold;
    j["record_every"] = c.record_every;
    j["rel_tol"] = c.rel_tol;
    j["picard_iters"] = c.picard_iters;
    j["transport_mass"] = to_string(c.transport_mass);
    j["stop_at_threshold"] = c.stop_at_threshold;
    return j;
}

Json to_json(const DatasetSpec& spec) {
    auto axis = [](const GridAxis& a) { return Json{{"lower", a.lower}, {"upper", a.upper}, {"step", a.step}}; };
    Json j;
    j["sigma"] = axis(spec.sigma);
    j["gamma"] = axis(spec.gamma);
    j["t"] = axis(spec.t);
    j["heal_threshold"] = spec.heal_threshold;
    j["base"] = to_json(spec.base);
    return j;
}

Json to_json(const surrogate::Hyperparameters& hp) {
    Json j;
    j["knn_k"] = hp.knn_k;
    j["logreg_epochs"] = hp.logreg_epochs;
    j["logreg_learning_rate"] = hp.logreg_learning_rate;
    j["svm_lambda"] = hp.svm_lambda;
    j["svm_epochs"] = hp.svm_epochs;
    j["svm_eta0"] = hp.svm_eta0;
    j["mlp_hidden"] = hp.mlp_hidden;
    j["mlp_dropout"] = hp.mlp_dropout;
    j["mlp_learning_rate"] = hp.mlp_learning_rate;
    j["mlp_batch"] = hp.mlp_batch;
    j["mlp_epochs"] = hp.mlp_epochs;
    j["seed"] = hp.seed;
    return j;
}

Json to_json(const RunConfig& rc) {
    Json j = to_json(rc.sim);
    if (rc.dataset) j["dataset"] = to_json(*rc.dataset);
    Json sweep = Json::object();
    if (rc.sweep.values) sweep["values"] = *rc.sweep.values;
    if (rc.sweep.sigmas) sweep["sigmas"] = *rc.sweep.sigmas;
    if (rc.sweep.gammas) sweep["gammas"] = *rc.sweep.gammas;
    if (!sweep.empty()) j["sweep"] = sweep;
    j["surrogate"] = to_json(rc.hyper);
    if (!rc.snapshot_times.empty()) j["snapshot_times"] = rc.snapshot_times;
    return j;
}

}  // namespace selfheal
