#pragma once

// Scenario generators: a velocity-prediction task whose input set drifts or
// whose network is trained online, and a dimming-image robustness task.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "onv/branching.hpp"
#include "onv/errors.hpp"
#include "onv/geometry.hpp"
#include "onv/network.hpp"
#include "onv/reachability.hpp"

namespace onv {

enum class ScenarioKind { domain_shift, network_updates, fine_tuning, dimming };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::domain_shift:
        return "domain_shift";
    case ScenarioKind::network_updates:
        return "network_updates";
    case ScenarioKind::fine_tuning:
        return "fine_tuning";
    case ScenarioKind::dimming:
        return "dimming";
    }
    return "?";
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
    for (auto k : {ScenarioKind::domain_shift, ScenarioKind::network_updates, ScenarioKind::fine_tuning,
                   ScenarioKind::dimming}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw InvalidInput("unknown scenario kind '" + s + "'");
}

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::domain_shift;
    std::size_t horizon = 50;

    /// Network loaded by the caller, or generated from (depth, width, seed).
    /// `depth` counts weight layers.
    std::optional<Network> network;
    std::size_t depth = 3;
    std::size_t width = 50;
    std::uint64_t net_seed = 1;
    /// Scale applied to the generated network's last layer; calibrated when
    /// absent (see `calibrate_output_gain`).
    std::optional<double> output_gain;
    /// Branch budget the calibration targets.
    std::size_t branches = 100;

    // velocity task
    double v_x = 1.0;
    double a_x = 0.1;
    double v_y = 5.0;
    double a_y = 10.0;
    /// Per-step loosening of the drifting bound.
    double shift_rate = 1e-3;
    /// Trailing input dimensions whose bound drifts.
    std::size_t changing_dims = 1;
    double learning_rate = 1e-3;
    /// Relative size of the teacher's offset from the initial network.
    double teacher_offset = 0.05;
    /// Multiplies the shift rate and the learning rate.
    double change_scale = 1.0;

    // dimming task
    std::size_t pixels = 16;
    std::size_t classes = 2;
    double radius = 2.0 / 256.0;
    double dim_rate = 1.0 / 256.0;

    std::uint64_t seed = 0;

    void validate() const {
        if (horizon < 1) {
            throw InvalidInput("ScenarioSpec: horizon must be at least 1");
        }
        if (!network && (depth < 1 || width < 1)) {
            throw InvalidInput("ScenarioSpec: generated network needs positive depth and width");
        }
        if (kind != ScenarioKind::dimming) {
            if (!(v_x > 0.0 && a_x > 0.0 && v_y > 0.0 && a_y > 0.0)) {
                throw InvalidInput("ScenarioSpec: velocity and acceleration limits must be positive");
            }
            if (!(shift_rate >= 0.0 && learning_rate >= 0.0 && change_scale >= 0.0 && teacher_offset >= 0.0)) {
                throw InvalidInput("ScenarioSpec: change parameters must be non-negative");
            }
            if (changing_dims < 1 || changing_dims > 9) {
                throw InvalidInput("ScenarioSpec: changing_dims must lie in [1, 9]");
            }
            if (kind == ScenarioKind::domain_shift &&
                v_x - shift_rate * change_scale * static_cast<double>(horizon) <= 0.0) {
                throw InvalidInput("ScenarioSpec: drifting bound becomes non-positive within the horizon");
            }
        } else {
            if (pixels < 1 || classes < 2) {
                throw InvalidInput("ScenarioSpec: dimming needs at least one pixel and two classes");
            }
            if (!(radius >= 0.0 && dim_rate >= 0.0)) {
                throw InvalidInput("ScenarioSpec: radius and dimming rate must be non-negative");
            }
        }
        if (network) {
            const std::size_t in = kind == ScenarioKind::dimming ? pixels : 9;
            const std::size_t out = kind == ScenarioKind::dimming ? classes : 9;
            if (network->input_dim() != in || network->output_dim() != out) {
                throw InvalidInput("ScenarioSpec: network must map " + std::to_string(in) + " inputs to " +
                                   std::to_string(out) + " outputs");
            }
        }
    }
};

struct ScenarioStep {
    Polytope input{1};
    Network net;
    OutputSpec spec;
};

namespace detail {

inline Vector unit(std::size_t n, std::size_t i, double v = 1.0) {
    Vector e(n, 0.0);
    e[i] = v;
    return e;
}

/// `|x_i| <= bound` as two rows.
inline void add_abs_bound(Polytope& p, std::size_t i, double bound) {
    p.add_base(unit(p.dim(), i), bound);
    p.add_base(unit(p.dim(), i, -1.0), bound);
}

/// `|x_j - x_i| <= bound` as two rows.
inline void add_abs_diff(Polytope& p, std::size_t i, std::size_t j, double bound) {
    Vector a(p.dim(), 0.0);
    a[j] = 1.0;
    a[i] = -1.0;
    p.add_base(a, bound);
    a[j] = -1.0;
    a[i] = 1.0;
    p.add_base(std::move(a), bound);
}

inline Network generated_network(const ScenarioSpec& s, std::size_t in, std::size_t out) {
    if (s.network) {
        return *s.network;
    }
    std::vector<std::size_t> dims{in};
    for (std::size_t i = 1; i < s.depth; ++i) {
        dims.push_back(s.width);
    }
    dims.push_back(out);
    return random_network(dims, s.net_seed);
}

inline Network with_gain(const Network& net, double gain) {
    Layer last = net.layers().back();
    for (auto& w : last.weights.data()) {
        w *= gain;
    }
    for (auto& b : last.bias) {
        b *= gain;
    }
    return net.with_layer(net.depth() - 1, std::move(last));
}

} // namespace detail

/// Input set of the velocity task over `[v_{t-3}, v_{t-2}, v_{t-1}]`: speed and
/// adjacent-step acceleration limits, plus for domain shift a bound on the
/// latest velocity whose trailing `changing_dims` components start at
/// `v_x − rate·T` and loosen to `v_x` at the horizon.
inline Polytope robotics_input(const ScenarioSpec& s, std::size_t t) {
    Polytope p(9);
    for (std::size_t i = 0; i < 9; ++i) {
        detail::add_abs_bound(p, i, s.v_x);
    }
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t c = 0; c < 3; ++c) {
            detail::add_abs_diff(p, 3 * j + c, 3 * (j + 1) + c, s.a_x);
        }
    }
    if (s.kind == ScenarioKind::domain_shift) {
        const double rate = s.shift_rate * s.change_scale;
        const double remaining = static_cast<double>(s.horizon) - static_cast<double>(std::min(t, s.horizon));
        const std::size_t first = 9 - std::max<std::size_t>(s.changing_dims, 3);
        for (std::size_t i = first; i < 9; ++i) {
            const bool drifting = i >= 9 - s.changing_dims;
            detail::add_abs_bound(p, i, drifting ? s.v_x - rate * remaining : s.v_x);
        }
    }
    return p;
}

/// Output set over `[v̂_t, v̂_{t+1}, v̂_{t+2}]`: speed and acceleration limits.
inline OutputSpec robotics_output(const ScenarioSpec& s) {
    OutputSpec spec;
    for (std::size_t i = 0; i < 9; ++i) {
        spec.rows.push_back({detail::unit(9, i), s.v_y});
        spec.rows.push_back({detail::unit(9, i, -1.0), s.v_y});
    }
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t c = 0; c < 3; ++c) {
            Vector a(9, 0.0);
            a[3 * (j + 1) + c] = 1.0;
            a[3 * j + c] = -1.0;
            spec.rows.push_back({a, s.a_y});
            for (auto& v : a) {
                v = -v;
            }
            spec.rows.push_back({a, s.a_y});
        }
    }
    return spec;
}

/// Largest last-layer gain on a 0.05 grid in [0.05, 20] for which plain
/// reach-and-branch proves the velocity task's largest input set with at most
/// half the branch budget. Keeps the task hard enough to need branching while
/// leaving room under the budget for looser, accelerated reach sets.
inline double calibrate_output_gain(const ScenarioSpec& s) {
    const Network base = detail::generated_network(s, 9, 9);
    const Polytope input = robotics_input(s, s.horizon);
    const OutputSpec spec = robotics_output(s);
    const std::size_t target = std::max<std::size_t>(1, s.branches / 2);
    auto passes = [&](double g) {
        const auto out = reach_and_branch(input, detail::with_gain(base, g), spec, {s.branches, 30, {}});
        return out.status == Status::hold && out.store.branches.size() <= target;
    };
    // leaf counts grow with the gain; bisect on the grid index
    std::size_t lo = 1, hi = 400;
    if (!passes(0.05 * static_cast<double>(lo))) {
        return 0.05;
    }
    if (passes(0.05 * static_cast<double>(hi))) {
        return 0.05 * static_cast<double>(hi);
    }
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (passes(0.05 * static_cast<double>(mid)) ? lo : hi) = mid;
    }
    return 0.05 * static_cast<double>(lo);
}

/// The scenario's initial network with its output gain applied.
inline Network initial_network(const ScenarioSpec& s) {
    if (s.kind == ScenarioKind::dimming) {
        return s.network ? *s.network : detail::generated_network(s, s.pixels, s.classes);
    }
    if (s.network) {
        return s.output_gain ? detail::with_gain(*s.network, *s.output_gain) : *s.network;
    }
    return detail::with_gain(detail::generated_network(s, 9, 9),
                             s.output_gain ? *s.output_gain : calibrate_output_gain(s));
}

/// A velocity history roughly inside the static input set.
template <class Rng> Vector robotics_sample(const ScenarioSpec& s, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector x(9);
    for (std::size_t c = 0; c < 3; ++c) {
        x[c] = 0.8 * s.v_x * u(rng);
        x[3 + c] = std::clamp(x[c] + s.a_x * u(rng), -s.v_x, s.v_x);
        x[6 + c] = std::clamp(x[3 + c] + s.a_x * u(rng), -s.v_x, s.v_x);
    }
    return x;
}

/// The whole horizon `t = 0..T` of a scenario. Network-update scenarios train
/// the network online with one gradient step per time step on a seeded
/// sample labelled by a fixed teacher (the initial network with every
/// parameter offset by a seeded relative amount); fine-tuning trains the last
/// layer only.
inline std::vector<ScenarioStep> generate(const ScenarioSpec& s) {
    s.validate();
    std::vector<ScenarioStep> steps;
    steps.reserve(s.horizon + 1);
    if (s.kind == ScenarioKind::dimming) {
        std::mt19937_64 rng(s.seed);
        std::uniform_real_distribution<double> pix(0.2, 0.9);
        Vector base(s.pixels);
        for (auto& v : base) {
            v = pix(rng);
        }
        const Network net = initial_network(s);
        const Vector logits = forward(net, base);
        const std::size_t label =
            static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        OutputSpec spec;
        for (std::size_t k = 0; k < s.classes; ++k) {
            if (k != label) {
                Vector c(s.classes, 0.0);
                c[k] = 1.0;
                c[label] = -1.0;
                spec.rows.push_back({std::move(c), 0.0});
            }
        }
        for (std::size_t t = 0; t <= s.horizon; ++t) {
            Vector lo(s.pixels), hi(s.pixels);
            for (std::size_t i = 0; i < s.pixels; ++i) {
                const double centre = base[i] - s.dim_rate * static_cast<double>(t);
                lo[i] = std::clamp(centre - s.radius, 0.0, 1.0);
                hi[i] = std::clamp(centre + s.radius, 0.0, 1.0);
            }
            steps.push_back({Polytope::from_box(IntervalBox(lo, hi)), net, spec});
        }
        return steps;
    }

    const OutputSpec spec = robotics_output(s);
    Network net = initial_network(s);
    Network teacher = net;
    std::mt19937_64 rng(s.seed);
    if (s.kind != ScenarioKind::domain_shift) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        auto layers = net.layers();
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (s.kind == ScenarioKind::fine_tuning && i + 1 < layers.size()) {
                continue;
            }
            for (auto& w : layers[i].weights.data()) {
                w += s.teacher_offset * std::abs(w) * u(rng);
            }
        }
        teacher = Network(std::move(layers));
    }
    const double lr = s.learning_rate * s.change_scale;
    for (std::size_t t = 0; t <= s.horizon; ++t) {
        steps.push_back({robotics_input(s, t), net, spec});
        if (s.kind != ScenarioKind::domain_shift) {
            const Vector x = robotics_sample(s, rng);
            net = gradient_step(net, x, forward(teacher, x), lr, s.kind == ScenarioKind::fine_tuning);
        }
    }
    return steps;
}

/// Step `t` of the scenario; pure in (spec, t).
inline ScenarioStep gen_robotics_scenario(const ScenarioSpec& s, std::size_t t) {
    if (s.kind == ScenarioKind::dimming) {
        throw InvalidInput("gen_robotics_scenario: dimming is not a velocity-task scenario");
    }
    if (t > s.horizon) {
        throw InvalidInput("gen_robotics_scenario: time index beyond the horizon");
    }
    if (s.kind == ScenarioKind::domain_shift) {
        s.validate();
        return {robotics_input(s, t), initial_network(s), robotics_output(s)};
    }
    return generate(s).at(t);
}

inline ScenarioStep gen_dimming_scenario(const ScenarioSpec& s, std::size_t t) {
    if (s.kind != ScenarioKind::dimming) {
        throw InvalidInput("gen_dimming_scenario: scenario kind is not dimming");
    }
    if (t > s.horizon) {
        throw InvalidInput("gen_dimming_scenario: time index beyond the horizon");
    }
    return generate(s).at(t);
}

} // namespace onv
