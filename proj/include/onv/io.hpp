#pragma once

// JSON and CSV plumbing: network and scenario files, per-step rows, witness
// records and branch dumps.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "onv/branching.hpp"
#include "onv/engine.hpp"
#include "onv/errors.hpp"
#include "onv/network.hpp"
#include "onv/scenario.hpp"

namespace onv::io {

using nlohmann::json;

namespace detail {

/// Reads a whole file; a missing file is an `InvalidInput`, not a parse error.
inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline const json& field(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) {
        throw ParseError(where + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(where + ": missing field '" + key + "'");
    }
    return *it;
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw ParseError(where + ": expected a number");
    }
    return v.get<double>();
}

inline std::size_t count(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ParseError(where + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

inline Vector numbers(const json& v, const std::string& where) {
    if (!v.is_array()) {
        throw ParseError(where + ": expected an array of numbers");
    }
    Vector out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

/// `{"layers": [{"weights": [[...], ...], "bias": [...], "activation": "relu"}]}`
inline json to_json(const Network& net) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        json rows = json::array();
        for (std::size_t r = 0; r < l.weights.rows(); ++r) {
            auto row = l.weights.row(r);
            rows.push_back(Vector(row.begin(), row.end()));
        }
        layers.push_back({{"weights", rows}, {"bias", l.bias}, {"activation", to_string(l.activation)}});
    }
    return {{"layers", layers}};
}

inline Network network_from_json(const json& j, const std::string& where = "network") {
    const json& layers = detail::field(j, "layers", where);
    if (!layers.is_array() || layers.empty()) {
        throw ParseError(where + ".layers: expected a non-empty array");
    }
    std::vector<Layer> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string at = where + ".layers[" + std::to_string(i) + "]";
        const json& w = detail::field(layers[i], "weights", at);
        if (!w.is_array() || w.empty()) {
            throw ParseError(at + ".weights: expected a non-empty array of rows");
        }
        std::vector<Vector> rows;
        for (std::size_t r = 0; r < w.size(); ++r) {
            rows.push_back(detail::numbers(w[r], at + ".weights[" + std::to_string(r) + "]"));
        }
        Layer l;
        try {
            l.weights = Matrix::from_rows(rows);
        } catch (const InvalidInput& e) {
            throw ParseError(at + ".weights: " + e.what());
        }
        l.bias = detail::numbers(detail::field(layers[i], "bias", at), at + ".bias");
        const std::string act = layers[i].value("activation", std::string("relu"));
        if (act == "relu") {
            l.activation = Activation::relu;
        } else if (act == "linear") {
            l.activation = Activation::linear;
        } else {
            throw ParseError(at + ".activation: unknown activation '" + act + "'");
        }
        out.push_back(std::move(l));
    }
    try {
        return Network(std::move(out));
    } catch (const InvalidInput& e) {
        throw ParseError(where + ": " + e.what());
    }
}

inline Network load_network(const std::filesystem::path& path) {
    return network_from_json(detail::read_json(path), path.string());
}

inline void save_network(const Network& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write '" + path.string() + "'");
    }
    out << to_json(net).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// `{"kind": ..., "horizon": T, "network": {"file": ...} | {"depth", "width", "seed"},
/// "params": {...}}`. A network file path is resolved against `base_dir`.
inline ScenarioSpec scenario_from_json(const json& j, const std::filesystem::path& base_dir = {},
                                       const std::string& where = "scenario") {
    ScenarioSpec s;
    const json& kind = detail::field(j, "kind", where);
    if (!kind.is_string()) {
        throw ParseError(where + ".kind: expected a string");
    }
    try {
        s.kind = parse_scenario_kind(kind.get<std::string>());
    } catch (const InvalidInput& e) {
        throw ParseError(where + ".kind: " + e.what());
    }
    if (j.contains("horizon")) {
        s.horizon = detail::count(j["horizon"], where + ".horizon");
    }
    if (j.contains("network")) {
        const json& n = j["network"];
        const std::string at = where + ".network";
        if (!n.is_object()) {
            throw ParseError(at + ": expected an object");
        }
        if (n.contains("file")) {
            if (!n["file"].is_string()) {
                throw ParseError(at + ".file: expected a string");
            }
            std::filesystem::path file = n["file"].get<std::string>();
            if (file.is_relative()) {
                file = base_dir / file;
            }
            s.network = load_network(file);
        } else {
            for (const auto& [key, value] : n.items()) {
                if (key == "depth") {
                    s.depth = detail::count(value, at + ".depth");
                } else if (key == "width") {
                    s.width = detail::count(value, at + ".width");
                } else if (key == "seed") {
                    s.net_seed = detail::count(value, at + ".seed");
                } else {
                    throw ParseError(at + ": unknown field '" + key + "'");
                }
            }
        }
    }
    if (j.contains("params")) {
        const json& p = j["params"];
        if (!p.is_object()) {
            throw ParseError(where + ".params: expected an object");
        }
        for (const auto& [key, value] : p.items()) {
            const std::string at = where + ".params." + key;
            if (key == "v_x") {
                s.v_x = detail::number(value, at);
            } else if (key == "a_x") {
                s.a_x = detail::number(value, at);
            } else if (key == "v_y") {
                s.v_y = detail::number(value, at);
            } else if (key == "a_y") {
                s.a_y = detail::number(value, at);
            } else if (key == "shift_rate") {
                s.shift_rate = detail::number(value, at);
            } else if (key == "changing_dims") {
                s.changing_dims = detail::count(value, at);
            } else if (key == "learning_rate") {
                s.learning_rate = detail::number(value, at);
            } else if (key == "teacher_offset") {
                s.teacher_offset = detail::number(value, at);
            } else if (key == "change_scale") {
                s.change_scale = detail::number(value, at);
            } else if (key == "output_gain") {
                s.output_gain = detail::number(value, at);
            } else if (key == "branches") {
                s.branches = detail::count(value, at);
            } else if (key == "pixels") {
                s.pixels = detail::count(value, at);
            } else if (key == "classes") {
                s.classes = detail::count(value, at);
            } else if (key == "radius") {
                s.radius = detail::number(value, at);
            } else if (key == "dim_rate") {
                s.dim_rate = detail::number(value, at);
            } else if (key == "seed") {
                s.seed = detail::count(value, at);
            } else {
                throw ParseError(where + ".params: unknown field '" + key + "'");
            }
        }
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "kind" && key != "horizon" && key != "network" && key != "params") {
            throw ParseError(where + ": unknown field '" + key + "'");
        }
    }
    try {
        s.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(where + ": " + e.what());
    }
    return s;
}

inline ScenarioSpec load_scenario(const std::filesystem::path& path) {
    return scenario_from_json(detail::read_json(path), path.parent_path(), path.string());
}

// ---------------------------------------------------------------------------
// Step rows, witnesses, branch dumps
// ---------------------------------------------------------------------------

inline constexpr const char* kStepHeader = "t,status,wall_ms,coverage,n_reused,n_lb,n_rsr,n_inn,n_ic,n_recomputed";

/// One CSV row; full rebuilds count as recomputed.
inline void write_step_row(std::ostream& out, const StepReport& r) {
    out << r.t << ',' << to_string(r.status) << ',' << r.wall_ms << ',' << r.coverage << ','
        << r.count(Path::reused) << ',' << r.count(Path::tolerated_lb) << ',' << r.count(Path::tolerated_rsr) << ','
        << r.count(Path::tolerated_inn) << ',' << r.count(Path::incremental) << ','
        << r.count(Path::recomputed) + r.count(Path::rebranched) << '\n';
}

/// Single-line record for a violated step, or empty when there is no witness.
inline std::string witness_line(const StepReport& r, const std::string& method = {}) {
    if (!r.witness) {
        return {};
    }
    json j = {{"t", r.t}, {"status", to_string(r.status)}, {"witness", *r.witness}};
    if (!method.empty()) {
        j["method"] = method;
    }
    return j.dump();
}

inline json to_json(const Polytope& p) {
    json rows = json::array();
    for (std::size_t i = 0; i < p.row_count(); ++i) {
        rows.push_back({{"a", p.row(i).a}, {"b", p.row(i).b}, {"split", i >= p.base_rows().size()}});
    }
    return {{"dim", p.dim()}, {"rows", rows}};
}

inline json to_json(const BranchStore& store) {
    json branches = json::array();
    for (const auto& b : store.branches) {
        json e = {{"id", b.id},
                  {"depth", b.depth},
                  {"status", to_string(b.verdict.status)},
                  {"margins", b.verdict.margins},
                  {"region", to_json(b.region)}};
        if (b.box) {
            e["box"] = {{"lo", b.box->lo()}, {"hi", b.box->hi()}};
        }
        if (b.lb_delta) {
            e["lb_delta"] = *b.lb_delta;
        }
        e["rsr_certificate"] = b.rsr_cert.has_value();
        branches.push_back(std::move(e));
    }
    return {{"origin_time", store.origin_time}, {"branches", branches}};
}

inline void save_branches(const BranchStore& store, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write '" + path.string() + "'");
    }
    out << to_json(store).dump(1) << '\n';
}

} // namespace onv::io
