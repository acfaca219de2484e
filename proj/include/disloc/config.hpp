#pragma once

#include "disloc/inverse.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace disloc {

using json = nlohmann::json;

// Typed access with JSON-pointer diagnostics. Every throw is a ValidationError
// carrying the pointer of the offending member.
class ConfigNode {
public:
    ConfigNode(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {}

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
    ConfigNode at(const std::string& key) const;
    ConfigNode at(std::size_t i) const;
    std::size_t size() const;

    double number() const;
    double positive() const;
    int integer() const;
    bool boolean() const;
    std::string string() const;
    Vec2 vec2() const;
    Polyline polyline() const;
    std::vector<double> numbers() const;

    double number_or(const std::string& key, double def) const { return has(key) ? at(key).number() : def; }
    double positive_or(const std::string& key, double def) const { return has(key) ? at(key).positive() : def; }
    int integer_or(const std::string& key, int def) const { return has(key) ? at(key).integer() : def; }
    bool boolean_or(const std::string& key, bool def) const { return has(key) ? at(key).boolean() : def; }
    std::string string_or(const std::string& key, const std::string& def) const {
        return has(key) ? at(key).string() : def;
    }
    std::vector<double> numbers_or(const std::string& key, std::vector<double> def) const {
        return has(key) ? at(key).numbers() : def;
    }

    const json& raw() const { return j_; }
    const std::string& pointer() const { return ptr_; }
    [[noreturn]] void fail(const std::string& msg) const;

private:
    const json& j_;
    std::string ptr_;
};

LameParameters parse_lame(const ConfigNode& n);
// Domain keys live directly in the node: outer, layers, interfaces,
// dirichlet_edges, measurement, omega.
LayeredDomain parse_domain(const ConfigNode& n);
Fault parse_fault(const ConfigNode& n);
JumpModel parse_jump_model(const ConfigNode& n);

// Named numeric thresholds. The defaults are the pinned acceptance values;
// configs and --thresholds files may override them by name.
class Thresholds {
public:
    static Thresholds defaults();
    double get(const std::string& name) const;
    void set(const std::string& name, double v);
    // Unknown names are rejected so a typo cannot silently keep a default.
    void override_from(const ConfigNode& n);
    json to_json() const;
    const std::map<std::string, double>& values() const { return v_; }

private:
    std::map<std::string, double> v_;
};

json load_json_file(const std::string& path);

}  // namespace disloc
