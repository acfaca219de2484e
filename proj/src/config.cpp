#include "disloc/config.hpp"

#include <fstream>
#include <sstream>

namespace disloc {

void ConfigNode::fail(const std::string& msg) const { throw ValidationError(msg, ptr_.empty() ? "/" : ptr_); }

ConfigNode ConfigNode::at(const std::string& key) const {
    const std::string p = ptr_ + "/" + key;
    if (!j_.is_object()) fail("expected an object");
    auto it = j_.find(key);
    if (it == j_.end()) throw ValidationError("missing required member \"" + key + "\"", p);
    return ConfigNode(*it, p);
}

ConfigNode ConfigNode::at(std::size_t i) const {
    if (!j_.is_array()) fail("expected an array");
    if (i >= j_.size()) fail("array too short");
    return ConfigNode(j_[i], ptr_ + "/" + std::to_string(i));
}

std::size_t ConfigNode::size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
}

double ConfigNode::number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("number must be finite");
    return v;
}

double ConfigNode::positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("value must be positive");
    return v;
}

int ConfigNode::integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
}

bool ConfigNode::boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
}

std::string ConfigNode::string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
}

Vec2 ConfigNode::vec2() const {
    if (!j_.is_array() || j_.size() != 2) fail("expected a pair [x, y]");
    return Vec2(at(0).number(), at(1).number());
}

Polyline ConfigNode::polyline() const {
    Polyline p;
    for (std::size_t i = 0; i < size(); ++i) p.push_back(at(i).vec2());
    return p;
}

std::vector<double> ConfigNode::numbers() const {
    std::vector<double> v;
    for (std::size_t i = 0; i < size(); ++i) v.push_back(at(i).number());
    return v;
}

LameParameters parse_lame(const ConfigNode& n) {
    LameParameters p{n.at("lambda").number(), n.at("mu").number()};
    const auto r = validate_lame(p, 2);
    if (!r.ok()) n.fail(r.summary());
    return p;
}

LayeredDomain parse_domain(const ConfigNode& n) {
    LayeredDomain d;
    d.outer = n.at("outer").polyline();
    const auto layers = n.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) d.layers.push_back(parse_lame(layers.at(i)));
    if (n.has("interfaces")) {
        const auto in = n.at("interfaces");
        for (std::size_t i = 0; i < in.size(); ++i) d.interfaces.push_back(in.at(i).polyline());
    }
    if (n.has("dirichlet_edges")) {
        const auto de = n.at("dirichlet_edges");
        for (std::size_t i = 0; i < de.size(); ++i) {
            const int e = de.at(i).integer();
            if (e < 0 || e >= static_cast<int>(d.outer.size())) de.at(i).fail("edge index out of range");
            d.dirichlet_edges.push_back(e);
        }
    }
    const auto m = n.at("measurement");
    const auto me = m.at("edges");
    for (std::size_t i = 0; i < me.size(); ++i) {
        const int e = me.at(i).integer();
        if (e < 0 || e >= static_cast<int>(d.outer.size())) me.at(i).fail("edge index out of range");
        d.measurement.edges.push_back(e);
    }
    if (d.measurement.edges.empty()) me.fail("measurement arc needs at least one edge");
    d.measurement.t_start = m.number_or("t_start", 0.0);
    d.measurement.t_end = m.number_or("t_end", 1.0);
    d.omega = n.number_or("omega", 0.0);
    if (d.omega < 0.0) n.at("omega").fail("frequency must be non-negative");
    const auto rep = validate_partition(d);
    if (!rep.ok()) n.fail("invalid layered domain: " + rep.summary());
    return d;
}

Fault parse_fault(const ConfigNode& n) {
    Fault f;
    f.vertices = n.at("vertices").polyline();
    f.closed = n.boolean_or("closed", false);
    return f;
}

JumpModel parse_jump_model(const ConfigNode& n) {
    JumpModel m;
    auto vecs = [](const ConfigNode& a) {
        std::vector<Vec2> v;
        for (std::size_t i = 0; i < a.size(); ++i) v.push_back(a.at(i).vec2());
        return v;
    };
    if (n.has("f")) m.f = vecs(n.at("f"));
    if (n.has("g")) m.g = vecs(n.at("g"));
    m.taper_tips = n.boolean_or("taper_tips", true);
    return m;
}

Thresholds Thresholds::defaults() {
    Thresholds t;
    t.v_ = {
        {"cgo.residual_rel", 1e-9},
        {"cgo.xi_eta_abs", 1e-12},
        {"cgo.eta_bound_slack", 1e-12},
        {"lemma.edge_integral_rel", 1e-8},
        {"lemma.sector_rel", 1e-6},
        {"convergence.min_order", 1.8},
        {"convergence.jump_abs", 1e-12},
        {"closure.quadrature_rel", 1e-11},
        {"closure.factor", 10.0},
        {"recovery.jump_abs", 1e-3},
        {"recovery.equal_abs", 1e-3},
        {"recovery.rotation_holds", 1e-3},
        {"recovery.rotation_violated", 0.1},
        {"decay.exponent_tol", 0.15},
        {"interface.distinct_abs", 1e-3},
        {"interface.identical_abs", 1e-6},
        {"dimred.residual_rel", 1e-6},
        {"dimred.moment_abs", 1e-14},
        {"dimred.g3_abs", 5e-3},
        {"dimred.scale_invariance", 1e-6},
        {"dimred.profile_agreement", 1e-5},
        {"dimred.commute_rel", 1e-10},
        {"distinguish.floor_factor", 10.0},
        {"distinguish.min_misfit", 1e-3},
        {"reconstruct.vertex_factor", 2.0},
        {"reconstruct.max_solves", 200.0},
        {"reconstruct.min_success", 4.0},
        {"relations.consistent_abs", 1e-14},
        {"relations.detect_low", 0.5},
        {"relations.detect_high", 2.0},
        {"runtime.c1", 5.0},
        {"runtime.c2", 30.0},
        {"runtime.c3", 120.0},
        {"runtime.c4", 60.0},
        {"runtime.c5", 120.0},
        {"runtime.c6", 60.0},
        {"runtime.c7", 60.0},
        {"runtime.c8", 120.0},
        {"runtime.c9", 180.0},
        {"runtime.c10", 600.0},
        {"runtime.c11", 1.0},
    };
    return t;
}

double Thresholds::get(const std::string& name) const {
    auto it = v_.find(name);
    if (it == v_.end()) throw ValidationError("unknown threshold \"" + name + "\"");
    return it->second;
}

void Thresholds::set(const std::string& name, double v) {
    if (!v_.count(name)) throw ValidationError("unknown threshold \"" + name + "\"", "/thresholds/" + name);
    if (!(v > 0.0)) throw ValidationError("thresholds must be positive", "/thresholds/" + name);
    v_[name] = v;
}

void Thresholds::override_from(const ConfigNode& n) {
    if (!n.raw().is_object()) n.fail("expected an object of named thresholds");
    for (auto it = n.raw().begin(); it != n.raw().end(); ++it) {
        const ConfigNode c = n.at(it.key());
        if (!v_.count(it.key())) c.fail("unknown threshold \"" + it.key() + "\"");
        const double v = c.number();
        if (!(v > 0.0)) c.fail("thresholds must be positive");
        v_[it.key()] = v;
    }
}

json Thresholds::to_json() const {
    json j = json::object();
    for (const auto& [k, v] : v_) j[k] = v;
    return j;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read configuration file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace disloc
