#pragma once

// Input splitting, the reach-and-branch verifier and coverage estimation.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "onv/errors.hpp"
#include "onv/geometry.hpp"
#include "onv/network.hpp"
#include "onv/reachability.hpp"

namespace onv {

enum class Tag { reuse, recompute };

/// A pre-verified enlarged region whose reach result still holds.
struct RelaxedCertificate {
    Polytope relaxed_region;
    ReachResult relaxed_reach;
    std::size_t built_at = 0;
    Verdict verdict;
};

struct Branch {
    std::uint64_t id = 0;
    Polytope region{1};
    std::size_t depth = 0;
    /// Box enclosing `region`: tight right after it is computed, possibly
    /// looser after a tolerated input change.
    std::optional<IntervalBox> box;
    /// `box` is the bounding box of the current region.
    bool box_tight = false;
    std::optional<ReachResult> cached_reach;
    Verdict verdict;
    std::optional<double> lb_delta;
    std::optional<RelaxedCertificate> rsr_cert;
    Tag tag = Tag::recompute;

    // Bookkeeping for the online engine.

    /// Region the Lipschitz threshold was computed on, and its box.
    std::optional<Polytope> lb_region;
    std::optional<IntervalBox> lb_box;
    std::shared_ptr<const AnchoredRegion> lb_anchor;
    /// Time index and network epoch of the branch's LB/RSR certificates.
    std::size_t cert_time = 0;
    std::uint64_t cert_net_epoch = 0;
    /// `cached_reach` covers the current region.
    bool reach_current = false;
    /// `cached_reach` came from interval-network propagation.
    bool reach_from_inn = false;
    std::uint64_t reach_hidden_epoch = 0;
    std::uint64_t reach_inn_epoch = 0;
    std::uint64_t reach_inn_hidden_epoch = 0;
};

struct VerifyLimits {
    /// Upper bound on the number of leaves (final branches).
    std::size_t max_branches = 1000;
    std::size_t max_depth = 30;
    std::optional<std::chrono::duration<double>> time_budget;
};

/// Verified partition of the input set plus the problem it was built for.
struct BranchStore {
    std::vector<Branch> branches;
    std::size_t origin_time = 0;
    std::uint64_t next_id = 0;

    // Context of the last step, maintained by the online engine.

    std::optional<Polytope> input;
    std::optional<Network> net;
    std::optional<OutputSpec> spec;
    double origin_coverage = 1.0;
    double last_coverage = 1.0;
    bool coverage_valid = false;
    /// Bumped on every full rebuild; background results from older generations are stale.
    std::uint64_t generation = 0;
    /// Bumped on any weight change / on a change outside the last layer.
    std::uint64_t net_epoch = 0;
    std::uint64_t hidden_epoch = 0;
    double lipschitz = 0.0;
    /// Running element-wise max of observed one-step layer differences.
    LayerDiff observed_diff;
    std::optional<IntervalNetwork> inn;
    std::uint64_t inn_epoch = 0;
    /// Coverage sample points and the input set they were drawn from.
    std::vector<Vector> coverage_points;
    std::optional<Polytope> coverage_input;
    std::uint64_t inn_hidden_epoch = 0;
};

/// Bisects the widest dimension of the region's bounding box at its midpoint
/// (lowest index on ties). Children get fresh ids and no cached results.
inline std::pair<Branch, Branch> split(const Branch& parent, std::uint64_t& next_id) {
    const IntervalBox box = parent.box ? *parent.box : bounding_box(parent.region);
    std::size_t k = 0;
    for (std::size_t i = 1; i < box.dim(); ++i) {
        if (box.width(i) > box.width(k)) {
            k = i;
        }
    }
    if (box.width(k) < 1e-9) {
        throw CannotSplit("split: region is degenerate in every dimension");
    }
    const double mid = 0.5 * (box.lo(k) + box.hi(k));
    Vector a(box.dim(), 0.0);
    a[k] = 1.0;
    Branch left;
    left.id = next_id++;
    left.region = parent.region;
    left.region.add_split(a, mid);
    left.depth = parent.depth + 1;
    Branch right;
    right.id = next_id++;
    right.region = parent.region;
    a[k] = -1.0;
    right.region.add_split(std::move(a), -mid);
    right.depth = parent.depth + 1;
    return {std::move(left), std::move(right)};
}

/// Reach function used by the verifier: plain interval propagation or an
/// interval-network variant.
using ReachFn = std::function<ReachResult(const IntervalBox&)>;

inline ReachFn plain_reach(const Network& net) {
    return [&net](const IntervalBox& box) { return reach_interval(net, box); };
}

struct BranchOutcome {
    Status status = Status::unknown;
    BranchStore store;
    std::optional<Vector> witness;
    std::size_t reach_calls = 0;
};

inline std::uint64_t check_seed(std::uint64_t id) { return 0x9e3779b97f4a7c15ULL * (id + 1); }

/// Reachability plus branching with a FIFO worklist. Unknown branches are
/// split until `max_branches` leaves exist or `max_depth` is reached; queued
/// branches are still evaluated once splitting stops. A violated branch aborts.
inline BranchOutcome reach_and_branch(const Polytope& input, const Network& net, const OutputSpec& spec,
                                      const VerifyLimits& limits, const ReachFn& reach = {},
                                      std::uint64_t first_id = 0) {
    if (input.dim() != net.input_dim()) {
        throw InvalidInput("reach_and_branch: input dimension does not match the network");
    }
    spec.validate(net.output_dim());
    const ReachFn fn = reach ? reach : plain_reach(net);
    const auto start = std::chrono::steady_clock::now();

    BranchOutcome out;
    out.store.next_id = first_id;
    Branch root;
    root.id = out.store.next_id++;
    root.region = input;
    try {
        root.box = bounding_box(input);
        root.box_tight = true;
    } catch (const EmptySet&) {
        throw InvalidInput("reach_and_branch: input set is infeasible");
    }

    std::deque<Branch> queue;
    queue.push_back(std::move(root));
    std::size_t leaves = 1;
    bool timed_out = false;
    while (!queue.empty()) {
        if (limits.time_budget && std::chrono::steady_clock::now() - start > *limits.time_budget) {
            timed_out = true;
            break;
        }
        Branch b = std::move(queue.front());
        queue.pop_front();
        if (!b.box) {
            try {
                b.box = bounding_box(b.region);
                b.box_tight = true;
            } catch (const EmptySet&) {
                --leaves;
                continue;
            }
        }
        b.cached_reach = fn(*b.box);
        b.reach_current = true;
        ++out.reach_calls;
        b.verdict = check(*b.cached_reach, spec, net, b.region, {64, check_seed(b.id)});
        if (b.verdict.status == Status::violated) {
            out.status = Status::violated;
            out.witness = b.verdict.witness;
            out.store.branches.push_back(std::move(b));
            for (auto& q : queue) {
                out.store.branches.push_back(std::move(q));
            }
            return out;
        }
        if (b.verdict.status == Status::hold || leaves >= limits.max_branches || b.depth >= limits.max_depth) {
            out.store.branches.push_back(std::move(b));
            continue;
        }
        try {
            auto [l, r] = split(b, out.store.next_id);
            queue.push_back(std::move(l));
            queue.push_back(std::move(r));
            ++leaves;
        } catch (const CannotSplit&) {
            out.store.branches.push_back(std::move(b));
        }
    }
    for (auto& q : queue) {
        out.store.branches.push_back(std::move(q));
    }
    bool all_hold = !timed_out;
    for (const auto& b : out.store.branches) {
        all_hold = all_hold && b.verdict.status == Status::hold && b.cached_reach;
    }
    out.status = all_hold ? Status::hold : Status::unknown;
    return out;
}

/// Uniform points of `input`: rejection from its enclosing parallelotope when
/// a pilot run accepts at least 5% of draws, otherwise hit-and-run. Returns
/// `n` points, or none when the input set is empty or flat.
inline std::vector<Vector> coverage_samples(const Polytope& input, std::size_t n, std::uint64_t seed) {
    const auto frame = enclosing_parallelotope(input);
    if (!frame) {
        return {};
    }
    std::mt19937_64 rng(seed);
    std::vector<Vector> pts;
    pts.reserve(n);
    const std::size_t pilot = 256;
    for (std::size_t draws = 1; pts.size() < n; ++draws) {
        Vector x = frame->sample(rng);
        if (contains_point(input, x)) {
            pts.push_back(std::move(x));
        }
        if (draws == pilot && pts.size() * 20 < pilot) {
            auto start = interior_point(input);
            if (!start) {
                return {};
            }
            return hit_and_run(input, start->x, n, rng);
        }
    }
    return pts;
}

namespace detail {

inline bool inside_rows(const std::vector<LinearConstraint>& rows, const Vector& x) {
    for (const auto& r : rows) {
        if (dot(r.a, x) > r.b + kFeasibilityTol) {
            return false;
        }
    }
    return true;
}

inline bool branch_contains(const Branch& b, const Vector& x, bool same_base) {
    if (b.box && !b.box->contains(x, kFeasibilityTol)) {
        return false;
    }
    return (same_base || inside_rows(b.region.base_rows(), x)) && inside_rows(b.region.split_rows(), x);
}

inline bool proven(const Branch& b) { return b.verdict.status == Status::hold && b.cached_reach.has_value(); }

} // namespace detail

/// Coverage of a store whose branches partition `input`: one minus the
/// fraction of `pts` lying in a branch that is not proven. Exactly 1 when
/// every branch is proven, without looking at the points.
inline double partition_coverage(const BranchStore& store, const Polytope& input, const std::vector<Vector>& pts) {
    std::vector<const Branch*> open;
    for (const auto& b : store.branches) {
        if (!detail::proven(b)) {
            open.push_back(&b);
        }
    }
    if (open.empty() && !store.branches.empty()) {
        return 1.0;
    }
    if (pts.empty()) {
        throw EstimationError("partition_coverage: no sample points");
    }
    std::size_t unproven = 0;
    for (const auto& x : pts) {
        for (const Branch* b : open) {
            if (detail::branch_contains(*b, x, b->region.base_rows() == input.base_rows())) {
                ++unproven;
                break;
            }
        }
    }
    return 1.0 - static_cast<double>(unproven) / static_cast<double>(pts.size());
}

/// Fraction of sampled input points lying in a hold branch.
inline double coverage_rate(const BranchStore& store, const Polytope& input, std::size_t n_samples,
                            std::uint64_t seed) {
    if (n_samples == 0) {
        throw InvalidInput("coverage_rate: n_samples must be positive");
    }
    const auto pts = coverage_samples(input, n_samples, seed);
    if (pts.empty()) {
        throw EstimationError("coverage_rate: no sample fell inside the input set");
    }
    std::vector<const Branch*> hold;
    std::vector<bool> same_base;
    for (const auto& b : store.branches) {
        if (detail::proven(b)) {
            hold.push_back(&b);
            same_base.push_back(b.region.base_rows() == input.base_rows());
        }
    }
    std::size_t verified = 0;
    for (const auto& x : pts) {
        for (std::size_t k = 0; k < hold.size(); ++k) {
            if (detail::branch_contains(*hold[k], x, same_base[k])) {
                ++verified;
                break;
            }
        }
    }
    return static_cast<double>(verified) / static_cast<double>(pts.size());
}

} // namespace onv
