#pragma once

// Seeded generators and brute-force oracles shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "onv/geometry.hpp"
#include "onv/network.hpp"
#include "onv/reachability.hpp"

namespace onv::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline IntervalBox random_box(Rng& rng, std::size_t dim, double span = 2.0) {
    Vector lo(dim), hi(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double a = uniform(rng, -span, span);
        const double w = uniform(rng, 0.05, span);
        lo[i] = a;
        hi[i] = a + w;
    }
    return IntervalBox(lo, hi);
}

/// A box cut by `cuts` random half-spaces that keep its centre strictly inside.
inline Polytope random_polytope(Rng& rng, std::size_t dim, std::size_t cuts) {
    const IntervalBox box = random_box(rng, dim);
    Polytope p = Polytope::from_box(box);
    const Vector c = box.center();
    for (std::size_t k = 0; k < cuts; ++k) {
        Vector a(dim);
        for (auto& v : a) {
            v = uniform(rng, -1.0, 1.0);
        }
        double reach = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            reach += std::abs(a[i]) * 0.5 * box.width(i);
        }
        const double b = dot(a, c) + uniform(rng, 0.2, 0.9) * reach;
        p.add_base(std::move(a), b);
    }
    return p;
}

/// Points of `p` by rejection from its bounding box.
inline std::vector<Vector> sample_points(const Polytope& p, Rng& rng, std::size_t n) {
    const IntervalBox box = bounding_box(p);
    std::vector<Vector> out;
    for (std::size_t draw = 0; out.size() < n && draw < 1000 * n; ++draw) {
        Vector x = sample_uniform(box, rng);
        if (contains_point(p, x, 0.0)) {
            out.push_back(std::move(x));
        }
    }
    return out;
}

/// Grid of points of `p` with the given spacing over its bounding box (2-D/3-D).
inline std::vector<Vector> grid_points(const Polytope& p, double h) {
    const IntervalBox box = bounding_box(p);
    std::vector<std::size_t> counts(box.dim());
    std::size_t total = 1;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        counts[i] = static_cast<std::size_t>(std::floor(box.width(i) / h + 1e-9)) + 1;
        total *= counts[i];
    }
    std::vector<Vector> out;
    Vector x(box.dim());
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t i = 0; i < box.dim(); ++i) {
            x[i] = std::min(box.hi(i), box.lo(i) + h * static_cast<double>(rest % counts[i]));
            rest /= counts[i];
        }
        if (contains_point(p, x)) {
            out.push_back(x);
        }
    }
    return out;
}

/// Brute-force max-min ℓ∞ distance between two point clouds.
inline double grid_distance(const std::vector<Vector>& s1, const std::vector<Vector>& s2) {
    double worst = 0.0;
    for (const auto& y : s2) {
        double best = kInf;
        for (const auto& x : s1) {
            double d = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                d = std::max(d, std::abs(x[i] - y[i]));
            }
            best = std::min(best, d);
            if (best <= worst) {
                break;
            }
        }
        worst = std::max(worst, best);
    }
    return worst;
}

inline Network random_net(Rng& rng, std::size_t in, std::size_t out, std::size_t max_hidden = 3,
                          std::size_t max_width = 8) {
    std::vector<std::size_t> dims{in};
    const std::size_t hidden = uniform_int(rng, 0, max_hidden);
    for (std::size_t h = 0; h < hidden; ++h) {
        dims.push_back(uniform_int(rng, 1, max_width));
    }
    dims.push_back(out);
    return random_network(dims, rng(), Activation::linear);
}

/// The |x| network: two relu units summed by a linear output.
inline Network abs_net() {
    Layer hidden{Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 0.0}, Activation::relu};
    Layer out{Matrix::from_rows({{1.0, 1.0}}), {0.0}, Activation::linear};
    return Network({hidden, out});
}

inline Network scalar_net(double w, double b, Activation act) {
    return Network({Layer{Matrix::from_rows({{w}}), {b}, act}});
}

/// Two-sided scalar spec `lo <= y <= hi`.
inline OutputSpec interval_spec(double lo, double hi) {
    return OutputSpec{{{{-1.0}, -lo}, {{1.0}, hi}}};
}

inline Polytope interval(double lo, double hi) { return Polytope::from_box(IntervalBox({lo}, {hi})); }

} // namespace onv::testing
