#pragma once

// Interval reachability for plain and interval networks, output checking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "onv/errors.hpp"
#include "onv/geometry.hpp"
#include "onv/network.hpp"

namespace onv {

/// Output set `{y : c·y <= d for every row}`; rows reuse `LinearConstraint` (`a` = c, `b` = d).
struct OutputSpec {
    std::vector<LinearConstraint> rows;

    void validate(std::size_t out_dim) const {
        if (rows.empty()) {
            throw InvalidInput("OutputSpec: no rows");
        }
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (rows[j].a.size() != out_dim) {
                throw InvalidInput("OutputSpec: row " + std::to_string(j) + " has dimension " +
                                   std::to_string(rows[j].a.size()) + ", network output is " + std::to_string(out_dim));
            }
        }
    }

    bool satisfied_by(std::span<const double> y) const {
        for (const auto& r : rows) {
            if (dot(r.a, y) > r.b) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

/// Post-activation boxes of every layer; `per_layer[0]` is the input box.
struct ReachResult {
    std::vector<IntervalBox> per_layer;

    const IntervalBox& input() const { return per_layer.front(); }
    const IntervalBox& output() const { return per_layer.back(); }
};

enum class Status { hold, unknown, violated };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::hold:
        return "hold";
    case Status::unknown:
        return "unknown";
    case Status::violated:
        return "violated";
    }
    return "?";
}

struct Verdict {
    Status status = Status::unknown;
    Vector margins;
    std::optional<Vector> witness;
};

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

namespace detail {

inline IntervalBox propagate(const Layer& l, const IntervalBox& in) {
    Vector lo(l.out_dim()), hi(l.out_dim());
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
        double sl = l.bias[r];
        double sh = l.bias[r];
        const auto w = l.weights.row(r);
        for (std::size_t c = 0; c < w.size(); ++c) {
            if (w[c] >= 0.0) {
                sl += w[c] * in.lo(c);
                sh += w[c] * in.hi(c);
            } else {
                sl += w[c] * in.hi(c);
                sh += w[c] * in.lo(c);
            }
        }
        if (l.activation == Activation::relu) {
            sl = std::max(sl, 0.0);
            sh = std::max(sh, 0.0);
        }
        lo[r] = sl;
        hi[r] = sh;
    }
    return IntervalBox(std::move(lo), std::move(hi));
}

inline IntervalBox propagate(const IntervalLayer& l, const IntervalBox& in) {
    Vector lo(l.out_dim()), hi(l.out_dim());
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
        double sl = l.bias_lo[r];
        double sh = l.bias_hi[r];
        const auto wl = l.weights_lo.row(r);
        const auto wh = l.weights_hi.row(r);
        for (std::size_t c = 0; c < wl.size(); ++c) {
            const double p1 = wl[c] * in.lo(c);
            const double p2 = wl[c] * in.hi(c);
            const double p3 = wh[c] * in.lo(c);
            const double p4 = wh[c] * in.hi(c);
            sl += std::min({p1, p2, p3, p4});
            sh += std::max({p1, p2, p3, p4});
        }
        if (l.activation == Activation::relu) {
            sl = std::max(sl, 0.0);
            sh = std::max(sh, 0.0);
        }
        lo[r] = sl;
        hi[r] = sh;
    }
    return IntervalBox(std::move(lo), std::move(hi));
}

} // namespace detail

inline ReachResult reach_interval(const Network& net, const IntervalBox& input) {
    if (input.dim() != net.input_dim()) {
        throw InvalidInput("reach_interval: input box has dimension " + std::to_string(input.dim()) +
                           ", network expects " + std::to_string(net.input_dim()));
    }
    ReachResult res;
    res.per_layer.reserve(net.depth() + 1);
    res.per_layer.push_back(input);
    for (const auto& l : net.layers()) {
        res.per_layer.push_back(detail::propagate(l, res.per_layer.back()));
    }
    return res;
}

/// Bounds valid for every network whose weights lie inside the intervals.
inline ReachResult reach_inn(const IntervalNetwork& inn, const IntervalBox& input) {
    if (input.dim() != inn.input_dim()) {
        throw InvalidInput("reach_inn: input box has dimension " + std::to_string(input.dim()) +
                           ", network expects " + std::to_string(inn.input_dim()));
    }
    ReachResult res;
    res.per_layer.reserve(inn.depth() + 1);
    res.per_layer.push_back(input);
    for (const auto& l : inn.layers()) {
        res.per_layer.push_back(detail::propagate(l, res.per_layer.back()));
    }
    return res;
}

/// Re-propagates from layer `first_changed` onward, keeping earlier boxes.
template <class Net> ReachResult reach_from(const Net& net, const ReachResult& cached, std::size_t first_changed) {
    if (cached.per_layer.size() != net.depth() + 1 || first_changed >= net.depth()) {
        throw InvalidInput("reach_from: cached result does not match the network");
    }
    ReachResult res;
    res.per_layer.assign(cached.per_layer.begin(),
                         cached.per_layer.begin() + static_cast<std::ptrdiff_t>(first_changed) + 1);
    for (std::size_t i = first_changed; i < net.depth(); ++i) {
        if (net.layer(i).in_dim() != res.per_layer.back().dim()) {
            throw InvalidInput("reach_from: layer " + std::to_string(i) + " width mismatch");
        }
        res.per_layer.push_back(detail::propagate(net.layer(i), res.per_layer.back()));
    }
    return res;
}

/// Swaps in a new final layer and recomputes only the last propagation.
inline ReachResult reach_incremental(const ReachResult& cached, const Layer& new_last_layer) {
    if (cached.per_layer.size() < 2) {
        throw InvalidInput("reach_incremental: cached result has fewer than two layers");
    }
    const IntervalBox& penultimate = cached.per_layer[cached.per_layer.size() - 2];
    if (new_last_layer.in_dim() != penultimate.dim()) {
        throw InvalidInput("reach_incremental: last layer expects " + std::to_string(new_last_layer.in_dim()) +
                           " inputs, cached penultimate box has " + std::to_string(penultimate.dim()));
    }
    ReachResult res = cached;
    res.per_layer.back() = detail::propagate(new_last_layer, penultimate);
    return res;
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

/// `d_j − max_{y∈box} c_j·y` per row.
inline Vector margins(const IntervalBox& out, const OutputSpec& spec) {
    spec.validate(out.dim());
    Vector m(spec.rows.size());
    for (std::size_t j = 0; j < spec.rows.size(); ++j) {
        const auto& c = spec.rows[j].a;
        double worst = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] > 0.0) {
                worst += c[k] * out.hi(k);
            } else if (c[k] < 0.0) {
                worst += c[k] * out.lo(k);
            }
        }
        m[j] = spec.rows[j].b - worst;
    }
    return m;
}

struct CheckOptions {
    /// Random counterexample candidates drawn from the region.
    std::size_t counterexample_samples = 64;
    std::uint64_t seed = 0;
};

inline bool all_nonnegative(const Vector& m) {
    return std::all_of(m.begin(), m.end(), [](double v) { return v >= 0.0; });
}

/// Hold when every margin is non-negative. Otherwise searches the region's
/// box corners, centre and seeded random points for a concrete violation.
inline Verdict check(const ReachResult& result, const OutputSpec& spec, const Network& net, const Polytope& region,
                     const CheckOptions& opts = {}) {
    Verdict v;
    v.margins = margins(result.output(), spec);
    if (all_nonnegative(v.margins)) {
        v.status = Status::hold;
        return v;
    }
    v.status = Status::unknown;
    const IntervalBox& box = result.input();
    auto try_point = [&](const Vector& x) {
        if (!contains_point(region, x)) {
            return false;
        }
        if (!spec.satisfied_by(forward(net, x))) {
            v.status = Status::violated;
            v.witness = x;
            return true;
        }
        return false;
    };
    if (try_point(box.center()) || try_point(box.lo()) || try_point(box.hi())) {
        return v;
    }
    std::mt19937_64 rng(opts.seed);
    std::size_t accepted = 0;
    for (std::size_t draw = 0; draw < 4 * opts.counterexample_samples && accepted < opts.counterexample_samples;
         ++draw) {
        Vector x = sample_uniform(box, rng);
        if (!contains_point(region, x)) {
            continue;
        }
        ++accepted;
        if (try_point(x)) {
            return v;
        }
    }
    return v;
}

/// Largest ℓ∞ input perturbation that provably keeps the output inside the
/// spec: `min_j margin_j / (‖c_j‖₁ · L)`.
inline double lb_threshold(const ReachResult& result, const OutputSpec& spec, const LipschitzBound& L) {
    const Vector m = margins(result.output(), spec);
    if (!all_nonnegative(m)) {
        throw InvalidState("lb_threshold: result does not hold against the spec");
    }
    if (L.value < 0.0) {
        throw InvalidInput("lb_threshold: negative Lipschitz bound");
    }
    double delta = kInf;
    for (std::size_t j = 0; j < spec.rows.size(); ++j) {
        const double cn = norm1(spec.rows[j].a);
        if (cn == 0.0 || L.value == 0.0) {
            continue;
        }
        delta = std::min(delta, m[j] / (cn * L.value));
    }
    return delta;
}

} // namespace onv
