#pragma once

// Boxes, H-polytopes, a small dense simplex solver and the set-distance
// bounds used by containment and tolerance checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "onv/errors.hpp"

namespace onv {

using Vector = std::vector<double>;

/// Feasibility / pivot tolerance shared by the LP backend and the containment tests.
inline constexpr double kFeasibilityTol = 1e-9;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm1(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) {
        s += std::abs(v);
    }
    return s;
}

inline double norm_inf(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) {
        s = std::max(s, std::abs(v));
    }
    return s;
}

// ---------------------------------------------------------------------------
// IntervalBox
// ---------------------------------------------------------------------------

/// Axis-aligned box `[lo, hi]`. Never empty: emptiness is expressed with
/// `std::optional<IntervalBox>` or an `EmptySet` error by the producer.
class IntervalBox {
  public:
    IntervalBox(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_.empty() || lo_.size() != hi_.size()) {
            throw InvalidInput("IntervalBox: bounds must have equal, non-zero length");
        }
        for (std::size_t i = 0; i < lo_.size(); ++i) {
            if (!(lo_[i] <= hi_[i])) {
                throw InvalidInput("IntervalBox: lo > hi in dimension " + std::to_string(i));
            }
        }
    }

    static IntervalBox point(const Vector& x) { return IntervalBox(x, x); }

    std::size_t dim() const { return lo_.size(); }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }
    double lo(std::size_t i) const { return lo_[i]; }
    double hi(std::size_t i) const { return hi_[i]; }
    double width(std::size_t i) const { return hi_[i] - lo_[i]; }

    Vector center() const {
        Vector c(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            c[i] = 0.5 * (lo_[i] + hi_[i]);
        }
        return c;
    }

    bool contains(std::span<const double> x, double tol = 0.0) const {
        for (std::size_t i = 0; i < dim(); ++i) {
            if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) {
                return false;
            }
        }
        return true;
    }

    /// Component-wise inclusion `other ⊆ *this`.
    bool contains(const IntervalBox& other, double tol = 0.0) const {
        for (std::size_t i = 0; i < dim(); ++i) {
            if (other.lo_[i] < lo_[i] - tol || other.hi_[i] > hi_[i] + tol) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const IntervalBox&, const IntervalBox&) = default;

  private:
    Vector lo_;
    Vector hi_;
};

template <class Rng> Vector sample_uniform(const IntervalBox& box, Rng& rng) {
    Vector x(box.dim());
    for (std::size_t i = 0; i < box.dim(); ++i) {
        std::uniform_real_distribution<double> u(box.lo(i), box.hi(i));
        x[i] = box.width(i) > 0.0 ? u(rng) : box.lo(i);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Polytope
// ---------------------------------------------------------------------------

/// One half-space `a·x <= b`.
struct LinearConstraint {
    Vector a;
    double b = 0.0;

    friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
};

/// H-polytope split into base rows (the problem's input set) and split rows
/// (added by branching). Updates of the input set rewrite base rows only.
class Polytope {
  public:
    explicit Polytope(std::size_t dim) : dim_(dim) {
        if (dim == 0) {
            throw InvalidInput("Polytope: dimension must be positive");
        }
    }

    static Polytope from_box(const IntervalBox& box) {
        Polytope p(box.dim());
        for (std::size_t i = 0; i < box.dim(); ++i) {
            Vector a(box.dim(), 0.0);
            a[i] = 1.0;
            p.add_base(a, box.hi(i));
            a[i] = -1.0;
            p.add_base(std::move(a), -box.lo(i));
        }
        return p;
    }

    std::size_t dim() const { return dim_; }
    const std::vector<LinearConstraint>& base_rows() const { return base_; }
    const std::vector<LinearConstraint>& split_rows() const { return split_; }
    std::size_t row_count() const { return base_.size() + split_.size(); }

    /// Rows indexed base first, then split.
    const LinearConstraint& row(std::size_t i) const {
        return i < base_.size() ? base_[i] : split_[i - base_.size()];
    }

    void add_base(Vector a, double b) { base_.push_back(checked(std::move(a), b)); }
    void add_split(Vector a, double b) { split_.push_back(checked(std::move(a), b)); }

    Polytope with_base_rows(std::vector<LinearConstraint> rows) const {
        Polytope p(dim_);
        for (auto& r : rows) {
            p.add_base(std::move(r.a), r.b);
        }
        p.split_ = split_;
        return p;
    }

    /// Every constant shifted by `offset` (base and split rows alike).
    Polytope relaxed(double offset) const {
        Polytope p = *this;
        for (auto& r : p.base_) {
            r.b += offset;
        }
        for (auto& r : p.split_) {
            r.b += offset;
        }
        return p;
    }

    /// Per-dimension bounds implied by the axis-aligned rows; `nullopt` if any
    /// row couples several coordinates. Bounds may be infinite or inverted.
    std::optional<std::pair<Vector, Vector>> axis_bounds() const {
        Vector lo(dim_, -kInf);
        Vector hi(dim_, kInf);
        for (std::size_t r = 0; r < row_count(); ++r) {
            const auto& c = row(r);
            std::size_t nz = dim_;
            for (std::size_t k = 0; k < dim_; ++k) {
                if (c.a[k] != 0.0) {
                    if (nz != dim_) {
                        return std::nullopt;
                    }
                    nz = k;
                }
            }
            if (nz == dim_) {
                if (c.b < 0.0) {
                    // 0 <= b < 0: empty set
                    lo.assign(dim_, kInf);
                    hi.assign(dim_, -kInf);
                    return std::make_pair(lo, hi);
                }
                continue;
            }
            const double bound = c.b / c.a[nz];
            if (c.a[nz] > 0.0) {
                hi[nz] = std::min(hi[nz], bound);
            } else {
                lo[nz] = std::max(lo[nz], bound);
            }
        }
        return std::make_pair(std::move(lo), std::move(hi));
    }

    friend bool operator==(const Polytope&, const Polytope&) = default;

  private:
    LinearConstraint checked(Vector a, double b) const {
        if (a.size() != dim_) {
            throw InvalidInput("Polytope: row has dimension " + std::to_string(a.size()) + ", expected " +
                               std::to_string(dim_));
        }
        if (!std::isfinite(b)) {
            throw InvalidInput("Polytope: non-finite constraint constant");
        }
        return {std::move(a), b};
    }

    std::size_t dim_;
    std::vector<LinearConstraint> base_;
    std::vector<LinearConstraint> split_;
};

inline bool contains_point(const Polytope& p, std::span<const double> x, double tol = kFeasibilityTol) {
    if (x.size() != p.dim()) {
        throw InvalidInput("contains_point: dimension mismatch");
    }
    for (std::size_t r = 0; r < p.row_count(); ++r) {
        const auto& c = p.row(r);
        if (dot(c.a, x) > c.b + tol) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Dense primal simplex
// ---------------------------------------------------------------------------

enum class LpStatus { optimal, infeasible, unbounded };

struct LPSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    Vector point;
};

namespace detail {

/// Tableau simplex for `max c·x s.t. A x <= b` over free `x`, with
/// ratio-test ties broken by lowest basis index. Phase 1 runs once in the
/// constructor; `maximize` may then be called repeatedly with different
/// objectives, each warm-started from the previous optimal basis.
class Simplex {
  public:
    explicit Simplex(const Polytope& p) : n_(p.dim()), m_(p.row_count()) {
        std::size_t n_art = 0;
        for (std::size_t r = 0; r < m_; ++r) {
            if (p.row(r).b < 0.0) {
                ++n_art;
            }
        }
        cols_ = 2 * n_ + m_ + n_art;
        width_ = cols_ + 1;
        first_art_ = 2 * n_ + m_;
        t_.assign((m_ + 1) * width_, 0.0);
        basis_.resize(m_);

        std::size_t art = first_art_;
        for (std::size_t r = 0; r < m_; ++r) {
            const auto& c = p.row(r);
            const double sign = c.b < 0.0 ? -1.0 : 1.0;
            double* row = at(r);
            for (std::size_t j = 0; j < n_; ++j) {
                row[j] = sign * c.a[j];
                row[n_ + j] = -sign * c.a[j];
            }
            row[2 * n_ + r] = sign;
            row[cols_] = sign * c.b;
            if (c.b < 0.0) {
                row[art] = 1.0;
                basis_[r] = art++;
            } else {
                basis_[r] = 2 * n_ + r;
            }
        }

        if (n_art == 0) {
            feasible_ = true;
            return;
        }

        // Phase 1: maximize -sum(artificials).
        double* z = at(m_);
        std::fill(z, z + width_, 0.0);
        for (std::size_t j = first_art_; j < cols_; ++j) {
            z[j] = 1.0;
        }
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] >= first_art_) {
                const double* row = at(r);
                for (std::size_t j = 0; j < width_; ++j) {
                    z[j] -= row[j];
                }
            }
        }
        if (iterate(/*allow_artificial=*/true) != LpStatus::optimal) {
            throw SolverFailure("simplex: phase 1 reported unbounded");
        }
        double infeas = -z[cols_];
        double scale = 1.0;
        for (std::size_t r = 0; r < m_; ++r) {
            scale = std::max(scale, std::abs(p.row(r).b));
        }
        if (infeas > kFeasibilityTol * scale) {
            feasible_ = false;
            return;
        }
        // Drive zero-level artificials out of the basis where possible.
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < first_art_) {
                continue;
            }
            const double* row = at(r);
            for (std::size_t j = 0; j < first_art_; ++j) {
                if (std::abs(row[j]) > kFeasibilityTol) {
                    pivot(r, j);
                    break;
                }
            }
        }
        feasible_ = true;
    }

    bool feasible() const { return feasible_; }

    LPSolution maximize(std::span<const double> c) {
        if (c.size() != n_) {
            throw InvalidInput("lp_solve: objective dimension mismatch");
        }
        if (!feasible_) {
            return {LpStatus::infeasible, 0.0, {}};
        }
        double* z = at(m_);
        std::fill(z, z + width_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            z[j] = -c[j];
            z[n_ + j] = c[j];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = cost(c, basis_[r]);
            if (cb != 0.0) {
                const double* row = at(r);
                for (std::size_t j = 0; j < width_; ++j) {
                    z[j] += cb * row[j];
                }
            }
        }
        const LpStatus st = iterate(/*allow_artificial=*/false);
        if (st == LpStatus::unbounded) {
            return {LpStatus::unbounded, kInf, {}};
        }
        Vector x(n_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            const std::size_t b = basis_[r];
            const double v = at(r)[cols_];
            if (b < n_) {
                x[b] += v;
            } else if (b < 2 * n_) {
                x[b - n_] -= v;
            }
        }
        return {LpStatus::optimal, z[cols_], std::move(x)};
    }

  private:
    double* at(std::size_t r) { return t_.data() + r * width_; }

    double cost(std::span<const double> c, std::size_t var) const {
        if (var < n_) {
            return c[var];
        }
        if (var < 2 * n_) {
            return -c[var - n_];
        }
        return 0.0;
    }

    void pivot(std::size_t pr, std::size_t pc) {
        double* prow = at(pr);
        const double inv = 1.0 / prow[pc];
        for (std::size_t j = 0; j < width_; ++j) {
            prow[j] *= inv;
        }
        prow[pc] = 1.0;
        for (std::size_t r = 0; r <= m_; ++r) {
            if (r == pr) {
                continue;
            }
            double* row = at(r);
            const double f = row[pc];
            if (f == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < width_; ++j) {
                row[j] -= f * prow[j];
            }
            row[pc] = 0.0;
            if (r < m_ && std::abs(row[cols_]) < 1e-14) {
                row[cols_] = 0.0;
            }
        }
        basis_[pr] = pc;
    }

    /// Dantzig pricing; after a run of degenerate pivots switches to Bland's
    /// rule, which cannot cycle, until the objective moves again.
    LpStatus iterate(bool allow_artificial) {
        const std::size_t limit = 50 * (m_ + cols_) + 1000;
        const std::size_t enter_end = allow_artificial ? cols_ : first_art_;
        std::size_t degenerate = 0;
        for (std::size_t it = 0; it < limit; ++it) {
            const double* z = at(m_);
            const bool bland = degenerate >= 20;
            std::size_t enter = cols_;
            double most = -kFeasibilityTol;
            for (std::size_t j = 0; j < enter_end; ++j) {
                if (z[j] < most) {
                    enter = j;
                    if (bland) {
                        break;
                    }
                    most = z[j];
                }
            }
            if (enter == cols_) {
                return LpStatus::optimal;
            }
            std::size_t leave = m_;
            double best = kInf;
            for (std::size_t r = 0; r < m_; ++r) {
                const double* row = at(r);
                const double a = row[enter];
                if (a > kFeasibilityTol) {
                    const double ratio = row[cols_] / a;
                    if (ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis_[r] < basis_[leave])) {
                        best = ratio;
                        leave = r;
                    }
                }
            }
            if (leave == m_) {
                return LpStatus::unbounded;
            }
            degenerate = best <= 1e-12 ? degenerate + 1 : 0;
            pivot(leave, enter);
        }
        throw SolverFailure("simplex: iteration limit exceeded");
    }

    std::size_t n_;
    std::size_t m_;
    std::size_t cols_ = 0;
    std::size_t width_ = 0;
    std::size_t first_art_ = 0;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
    bool feasible_ = false;
};

inline void verify_feasible(const Polytope& p, const Vector& x) {
    for (std::size_t r = 0; r < p.row_count(); ++r) {
        const auto& c = p.row(r);
        double mag = std::abs(c.b) + 1.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            mag += std::abs(c.a[k] * x[k]);
        }
        if (dot(c.a, x) - c.b > kFeasibilityTol * mag) {
            throw SolverFailure("simplex: optimum violates row " + std::to_string(r));
        }
    }
}

} // namespace detail

/// `max c·x` over the polytope. Deterministic.
inline LPSolution lp_solve(std::span<const double> c, const Polytope& p) {
    if (c.size() != p.dim()) {
        throw InvalidInput("lp_solve: objective has dimension " + std::to_string(c.size()) + ", polytope " +
                           std::to_string(p.dim()));
    }
    if (p.row_count() == 0) {
        throw InvalidInput("lp_solve: empty constraint list");
    }
    detail::Simplex s(p);
    auto sol = s.maximize(c);
    if (sol.status == LpStatus::optimal) {
        detail::verify_feasible(p, sol.point);
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Bounding boxes and containment
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<IntervalBox> closed_form_box(const Polytope& p, bool& is_axis) {
    auto bounds = p.axis_bounds();
    is_axis = bounds.has_value();
    if (!bounds) {
        return std::nullopt;
    }
    auto& [lo, hi] = *bounds;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        if (lo[i] > hi[i]) {
            throw EmptySet("bounding_box: polytope is infeasible");
        }
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
            throw InvalidInput("bounding_box: polytope is unbounded in dimension " + std::to_string(i));
        }
    }
    return IntervalBox(std::move(lo), std::move(hi));
}

} // namespace detail

/// Tightest axis-aligned enclosure. Closed form for axis-aligned rows,
/// otherwise `2·dim` warm-started LPs.
inline IntervalBox bounding_box(const Polytope& p) {
    bool axis = false;
    if (auto box = detail::closed_form_box(p, axis)) {
        return *box;
    }
    detail::Simplex s(p);
    if (!s.feasible()) {
        throw EmptySet("bounding_box: polytope is infeasible");
    }
    const std::size_t n = p.dim();
    Vector lo(n), hi(n), c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = 1.0;
        auto up = s.maximize(c);
        c[i] = -1.0;
        auto down = s.maximize(c);
        c[i] = 0.0;
        if (up.status != LpStatus::optimal || down.status != LpStatus::optimal) {
            throw InvalidInput("bounding_box: polytope is unbounded in dimension " + std::to_string(i));
        }
        hi[i] = up.objective;
        lo[i] = -down.objective;
        if (lo[i] > hi[i]) {
            // flat direction; round-off only
            const double mid = 0.5 * (lo[i] + hi[i]);
            lo[i] = hi[i] = mid;
        }
    }
    return IntervalBox(std::move(lo), std::move(hi));
}

struct SubsetResult {
    bool contained = false;
    /// Set when the candidate was detected to be infeasible (vacuous containment).
    bool candidate_empty = false;

    explicit operator bool() const { return contained; }
};

/// `candidate ⊆ reference`, one LP per reference row. Rows whose normal also
/// appears in the candidate with a constant no larger are settled without an LP.
/// With `detect_empty` off, an infeasible candidate settled entirely by that
/// shortcut is reported as contained without the empty flag.
inline SubsetResult subset_check(const Polytope& candidate, const Polytope& reference, bool detect_empty = true) {
    if (candidate.dim() != reference.dim()) {
        throw InvalidInput("subset_check: dimension mismatch");
    }
    const auto cb = candidate.axis_bounds();
    const auto rb = reference.axis_bounds();
    if (cb && rb) {
        const auto& [clo, chi] = *cb;
        const auto& [rlo, rhi] = *rb;
        bool empty = false;
        for (std::size_t i = 0; i < candidate.dim(); ++i) {
            empty = empty || clo[i] > chi[i];
        }
        if (empty) {
            return {true, true};
        }
        for (std::size_t i = 0; i < candidate.dim(); ++i) {
            if (clo[i] < rlo[i] - kFeasibilityTol || chi[i] > rhi[i] + kFeasibilityTol) {
                return {false, false};
            }
        }
        return {true, false};
    }

    std::optional<detail::Simplex> simplex;
    for (std::size_t r = 0; r < reference.row_count(); ++r) {
        const auto& ref = reference.row(r);
        const double tol = kFeasibilityTol * (1.0 + std::abs(ref.b));
        bool settled = r < candidate.row_count() && candidate.row(r).b <= ref.b + tol && candidate.row(r).a == ref.a;
        for (std::size_t q = 0; q < candidate.row_count() && !settled; ++q) {
            const auto& cand = candidate.row(q);
            settled = cand.b <= ref.b + tol && cand.a == ref.a;
        }
        if (settled) {
            continue;
        }
        if (!simplex) {
            simplex.emplace(candidate);
            if (!simplex->feasible()) {
                return {true, true};
            }
        }
        auto sol = simplex->maximize(ref.a);
        if (sol.status == LpStatus::unbounded || sol.objective - ref.b > tol) {
            return {false, false};
        }
    }
    if (!simplex && detect_empty && !detail::Simplex(candidate).feasible()) {
        return {true, true};
    }
    return {true, false};
}

// ---------------------------------------------------------------------------
// Set distance  Δ(S1, S2) = max_{x'∈S2} min_{x∈S1} ‖x' − x‖∞
// ---------------------------------------------------------------------------

struct DistanceOptions {
    /// Largest dimension for which box-vertex enumeration is attempted.
    std::size_t vertex_cap = 20;
};

namespace detail {

/// `min_{x∈S1} ‖v − x‖∞` as an epigraph LP over `(x, t)`.
inline double point_distance(const Polytope& s1, const Vector& v) {
    const std::size_t n = s1.dim();
    Polytope lp(n + 1);
    for (std::size_t r = 0; r < s1.row_count(); ++r) {
        Vector a = s1.row(r).a;
        a.push_back(0.0);
        lp.add_base(std::move(a), s1.row(r).b);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Vector a(n + 1, 0.0);
        a[i] = 1.0;
        a[n] = -1.0;
        lp.add_base(a, v[i]);
        a[i] = -1.0;
        lp.add_base(std::move(a), -v[i]);
    }
    Vector c(n + 1, 0.0);
    c[n] = -1.0;
    auto sol = lp_solve(c, lp);
    if (sol.status == LpStatus::infeasible) {
        throw EmptySet("set_distance_upper: S1 is infeasible");
    }
    if (sol.status != LpStatus::optimal) {
        throw SolverFailure("set_distance_upper: distance LP unbounded");
    }
    return std::max(0.0, -sol.objective);
}

} // namespace detail

/// Upper bound on `Δ(S1, S2)`. Exact when both sets are boxes; otherwise the
/// maximum point-to-set distance over the vertices of `bounding_box(S2)`.
inline double set_distance_upper(const Polytope& s1, const Polytope& s2, const DistanceOptions& opts = {}) {
    if (s1.dim() != s2.dim()) {
        throw InvalidInput("set_distance_upper: dimension mismatch");
    }
    bool axis1 = false, axis2 = false;
    auto b1 = detail::closed_form_box(s1, axis1);
    std::optional<IntervalBox> b2;
    if (axis1) {
        b2 = detail::closed_form_box(s2, axis2);
    }
    if (b1 && b2) {
        double d = 0.0;
        for (std::size_t i = 0; i < s1.dim(); ++i) {
            d = std::max({d, b1->lo(i) - b2->lo(i), b2->hi(i) - b1->hi(i)});
        }
        return d;
    }
    if (s2.dim() > opts.vertex_cap) {
        throw CapabilityError("set_distance_upper: dimension " + std::to_string(s2.dim()) +
                              " exceeds the vertex-enumeration cap; use box-only regions");
    }
    const IntervalBox box2 = bounding_box(s2);
    std::vector<std::size_t> free_dims;
    for (std::size_t i = 0; i < box2.dim(); ++i) {
        if (box2.width(i) > 0.0) {
            free_dims.push_back(i);
        }
    }
    double worst = 0.0;
    Vector v = box2.lo();
    const std::uint64_t count = std::uint64_t{1} << free_dims.size();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        for (std::size_t k = 0; k < free_dims.size(); ++k) {
            const std::size_t i = free_dims[k];
            v[i] = (mask >> k) & 1U ? box2.hi(i) : box2.lo(i);
        }
        if (contains_point(s1, v)) {
            continue;
        }
        worst = std::max(worst, detail::point_distance(s1, v));
    }
    return worst;
}

/// Point strictly inside a polytope together with the radius of the largest
/// ℓ∞ ball around it that fits.
struct InteriorPoint {
    Vector x;
    double radius = 0.0;
};

inline std::optional<InteriorPoint> interior_point(const Polytope& p) {
    const std::size_t n = p.dim();
    Polytope lp(n + 1);
    for (std::size_t r = 0; r < p.row_count(); ++r) {
        Vector a = p.row(r).a;
        a.push_back(norm1(p.row(r).a));
        lp.add_base(std::move(a), p.row(r).b);
    }
    Vector cap(n + 1, 0.0);
    cap[n] = 1.0;
    lp.add_base(cap, 1e6);
    auto sol = lp_solve(cap, lp);
    if (sol.status != LpStatus::optimal || sol.objective <= kFeasibilityTol) {
        return std::nullopt;
    }
    Vector x(sol.point.begin(), sol.point.begin() + static_cast<std::ptrdiff_t>(n));
    return InteriorPoint{std::move(x), sol.objective};
}

/// Approximately uniform points of a bounded polytope by hit-and-run from
/// `start`, which must lie strictly inside. Burn-in and thinning grow with the
/// dimension.
template <class Rng>
std::vector<Vector> hit_and_run(const Polytope& p, const Vector& start, std::size_t n, Rng& rng) {
    const std::size_t d = p.dim();
    const std::size_t burn_in = 10 * d * d + 50;
    const std::size_t thin = 2 * d;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x = start, dir(d);
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t step = 0; out.size() < n; ++step) {
        for (auto& v : dir) {
            v = normal(rng);
        }
        double lo = -kInf, hi = kInf;
        for (std::size_t r = 0; r < p.row_count(); ++r) {
            const auto& row = p.row(r);
            const double ad = dot(row.a, dir);
            const double slack = std::max(0.0, row.b - dot(row.a, x));
            if (ad > 0.0) {
                hi = std::min(hi, slack / ad);
            } else if (ad < 0.0) {
                lo = std::max(lo, slack / ad);
            }
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            throw InvalidInput("hit_and_run: polytope is unbounded");
        }
        const double s = lo + (hi - lo) * unit(rng);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += s * dir[i];
        }
        if (step >= burn_in && (step - burn_in) % thin == 0) {
            out.push_back(x);
        }
    }
    return out;
}

/// `{x : lo ≤ A x ≤ hi}` with `A` square and invertible, stored with the rows
/// of `A⁻¹` so slab coordinates map back to points.
struct Parallelotope {
    std::vector<Vector> directions;
    Vector lo, hi;
    std::vector<Vector> inverse;

    template <class Rng> Vector sample(Rng& rng) const {
        const std::size_t d = directions.size();
        Vector u(d), x(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            u[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
        }
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = dot(inverse[i], u);
        }
        return x;
    }
};

namespace detail {

/// Rows of the inverse of a square matrix by Gauss-Jordan elimination with
/// partial pivoting; none when numerically singular.
inline std::optional<std::vector<Vector>> invert(std::vector<Vector> m) {
    const std::size_t d = m.size();
    std::vector<Vector> inv(d, Vector(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        inv[i][i] = 1.0;
    }
    for (std::size_t c = 0; c < d; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < d; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) {
                piv = r;
            }
        }
        if (std::abs(m[piv][c]) < 1e-12) {
            return std::nullopt;
        }
        std::swap(m[c], m[piv]);
        std::swap(inv[c], inv[piv]);
        const double p = m[c][c];
        for (std::size_t k = 0; k < d; ++k) {
            m[c][k] /= p;
            inv[c][k] /= p;
        }
        for (std::size_t r = 0; r < d; ++r) {
            if (r != c && m[r][c] != 0.0) {
                const double f = m[r][c];
                for (std::size_t k = 0; k < d; ++k) {
                    m[r][k] -= f * m[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    return inv;
}

} // namespace detail

/// Enclosing parallelotope with faces drawn from the polytope's row normals
/// and the coordinate axes. Directions are chosen greedily by smallest width
/// per unit of distance from the span of those already chosen, which is the
/// factor each choice contributes to the volume. None when the polytope is
/// empty or flat.
inline std::optional<Parallelotope> enclosing_parallelotope(const Polytope& p) {
    const std::size_t d = p.dim();
    std::vector<Vector> cand;
    auto add = [&](Vector a) {
        const double n = std::sqrt(dot(a, a));
        if (n == 0.0) {
            return;
        }
        for (auto& v : a) {
            v /= n;
        }
        for (const auto& c : cand) {
            const double cos = dot(a, c);
            if (std::abs(std::abs(cos) - 1.0) < 1e-12) {
                return;
            }
        }
        cand.push_back(std::move(a));
    };
    for (std::size_t i = 0; i < d; ++i) {
        Vector e(d, 0.0);
        e[i] = 1.0;
        add(std::move(e));
    }
    for (std::size_t r = 0; r < p.row_count(); ++r) {
        add(p.row(r).a);
    }

    detail::Simplex s(p);
    if (!s.feasible()) {
        return std::nullopt;
    }
    Vector lo(cand.size()), hi(cand.size());
    for (std::size_t k = 0; k < cand.size(); ++k) {
        auto up = s.maximize(cand[k]);
        Vector neg = cand[k];
        for (auto& v : neg) {
            v = -v;
        }
        auto down = s.maximize(neg);
        if (up.status != LpStatus::optimal || down.status != LpStatus::optimal) {
            throw InvalidInput("enclosing_parallelotope: polytope is unbounded");
        }
        hi[k] = up.objective;
        lo[k] = std::min(-down.objective, hi[k]);
    }

    Parallelotope out;
    std::vector<Vector> basis; // orthonormal span of the chosen directions
    std::vector<bool> used(cand.size(), false);
    while (out.directions.size() < d) {
        std::size_t best = cand.size();
        double best_score = kInf;
        Vector best_residual;
        for (std::size_t k = 0; k < cand.size(); ++k) {
            if (used[k]) {
                continue;
            }
            Vector r = cand[k];
            for (const auto& q : basis) {
                const double c = dot(r, q);
                for (std::size_t i = 0; i < d; ++i) {
                    r[i] -= c * q[i];
                }
            }
            const double rn = std::sqrt(dot(r, r));
            if (rn < 1e-6) {
                continue;
            }
            const double score = (hi[k] - lo[k]) / rn;
            if (score < best_score) {
                best = k;
                best_score = score;
                for (auto& v : r) {
                    v /= rn;
                }
                best_residual = std::move(r);
            }
        }
        if (best == cand.size() || !(best_score > 1e-12)) {
            return std::nullopt;
        }
        used[best] = true;
        basis.push_back(std::move(best_residual));
        out.directions.push_back(cand[best]);
        out.lo.push_back(lo[best]);
        out.hi.push_back(hi[best]);
    }
    auto inv = detail::invert(out.directions);
    if (!inv) {
        return std::nullopt;
    }
    out.inverse = std::move(*inv);
    return out;
}

/// A reference region prepared for repeated distance queries: its bounding
/// box and an interior point with positive slack on every row.
struct AnchoredRegion {
    Polytope region;
    IntervalBox box;
    Vector interior;
    Vector slack;
};

inline std::optional<AnchoredRegion> make_anchor(const Polytope& region, const IntervalBox& box) {
    auto ip = interior_point(region);
    if (!ip) {
        return std::nullopt;
    }
    Vector slack(region.row_count());
    for (std::size_t r = 0; r < region.row_count(); ++r) {
        slack[r] = region.row(r).b - dot(region.row(r).a, ip->x);
        if (slack[r] <= 0.0) {
            return std::nullopt;
        }
    }
    return AnchoredRegion{region, box, std::move(ip->x), std::move(slack)};
}

/// Upper bound on `Δ(anchor.region, s2)` by radial contraction toward the
/// anchor's interior point `x0`: if `a_j·x <= b_j + e_j` on `s2`, then
/// `x0 + λ(x' − x0)` lies in the anchor region for `λ = min_j s_j/(s_j + e_j⁺)`,
/// giving `Δ <= (1 − λ)/λ · max_i |box_i − x0_i|`. Rows whose normal appears
/// verbatim in `s2` bound `e_j` without an LP.
inline double anchored_distance_upper(const AnchoredRegion& anchor, const Polytope& s2) {
    const Polytope& s1 = anchor.region;
    if (s1.dim() != s2.dim()) {
        throw InvalidInput("anchored_distance_upper: dimension mismatch");
    }
    std::optional<detail::Simplex> simplex;
    double lambda = 1.0;
    for (std::size_t r = 0; r < s1.row_count(); ++r) {
        const auto& row = s1.row(r);
        double excess = kInf;
        if (r < s2.row_count() && s2.row(r).a == row.a) {
            excess = s2.row(r).b - row.b;
        } else {
            for (std::size_t q = 0; q < s2.row_count(); ++q) {
                if (s2.row(q).a == row.a) {
                    excess = std::min(excess, s2.row(q).b - row.b);
                }
            }
        }
        if (excess == kInf) {
            if (!simplex) {
                simplex.emplace(s2);
                if (!simplex->feasible()) {
                    return 0.0;
                }
            }
            auto sol = simplex->maximize(row.a);
            if (sol.status != LpStatus::optimal) {
                return kInf;
            }
            excess = sol.objective - row.b;
        }
        if (excess > 0.0) {
            lambda = std::min(lambda, anchor.slack[r] / (anchor.slack[r] + excess));
        }
    }
    if (lambda >= 1.0) {
        return 0.0;
    }
    double reach = 0.0;
    for (std::size_t i = 0; i < s1.dim(); ++i) {
        reach = std::max({reach, anchor.box.hi(i) - anchor.interior[i], anchor.interior[i] - anchor.box.lo(i)});
    }
    return (1.0 - lambda) / lambda * reach;
}

} // namespace onv
