#pragma once

// Per-step online verification: branch management for input and weight
// changes, tolerance checks, incremental recomputation, background
// certificate construction and the worker-count planner.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "onv/branching.hpp"
#include "onv/errors.hpp"
#include "onv/geometry.hpp"
#include "onv/network.hpp"
#include "onv/reachability.hpp"

namespace onv {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Accel : unsigned { bmi = 1U, rsr = 2U, lb = 4U, bmw = 8U, inn = 16U, ic = 32U };

inline constexpr std::pair<Accel, const char*> kAccelNames[] = {
    {Accel::bmi, "bmi"}, {Accel::rsr, "rsr"}, {Accel::lb, "lb"},
    {Accel::bmw, "bmw"}, {Accel::inn, "inn"}, {Accel::ic, "ic"},
};

class AccelSet {
  public:
    AccelSet() = default;
    AccelSet(std::initializer_list<Accel> flags) {
        for (Accel a : flags) {
            add(a);
        }
    }

    bool has(Accel a) const { return (bits_ & static_cast<unsigned>(a)) != 0; }
    bool empty() const { return bits_ == 0; }
    AccelSet& add(Accel a) {
        bits_ |= static_cast<unsigned>(a);
        return *this;
    }

    /// Comma-separated names; "" and "none" give the empty set.
    static AccelSet parse(std::string_view csv) {
        AccelSet s;
        while (!csv.empty()) {
            const auto comma = csv.find(',');
            std::string_view tok = csv.substr(0, comma);
            csv = comma == std::string_view::npos ? std::string_view{} : csv.substr(comma + 1);
            while (!tok.empty() && tok.front() == ' ') {
                tok.remove_prefix(1);
            }
            while (!tok.empty() && tok.back() == ' ') {
                tok.remove_suffix(1);
            }
            if (tok.empty() || tok == "none" || tok == "baseline") {
                continue;
            }
            bool found = false;
            for (const auto& [flag, name] : kAccelNames) {
                if (tok == name) {
                    s.add(flag);
                    found = true;
                }
            }
            if (!found) {
                throw InvalidInput("unknown accelerator '" + std::string(tok) + "'");
            }
        }
        return s;
    }

    /// "baseline" for the empty set, otherwise names joined by '+'.
    std::string to_string() const {
        std::string out;
        for (const auto& [flag, name] : kAccelNames) {
            if (has(flag)) {
                out += out.empty() ? "" : "+";
                out += name;
            }
        }
        return out.empty() ? "baseline" : out;
    }

    friend bool operator==(const AccelSet&, const AccelSet&) = default;

  private:
    unsigned bits_ = 0;
};

struct EngineConfig {
    AccelSet accel;
    /// Rebuild when coverage falls below this fraction of the coverage at the
    /// last rebuild; 0 disables rebuilding.
    double rebranch_coverage_threshold = 0.95;
    double rsr_offset = 1e-3;
    double inn_radius_scale = 5.0;
    /// Per-layer base radius for the interval network. When absent, the
    /// running maximum of observed one-step weight changes is used.
    std::optional<LayerDiff> inn_base_radius;
    std::size_t coverage_samples = 2000;
    std::uint64_t seed = 0;
    VerifyLimits limits{100, 30, {}};
    /// Run certificate construction inline instead of on the worker pool.
    bool synchronous = true;
    std::size_t workers = 1;
    /// Measure coverage every step even when no rebuild rule needs it.
    bool track_coverage = true;

    void validate() const {
        if (!(rebranch_coverage_threshold >= 0.0 && rebranch_coverage_threshold <= 1.0)) {
            throw InvalidInput("EngineConfig: rebranch_coverage_threshold must lie in [0, 1]");
        }
        if (!(rsr_offset >= 0.0) || !(inn_radius_scale >= 0.0)) {
            throw InvalidInput("EngineConfig: offsets and scales must be non-negative");
        }
        if (coverage_samples == 0) {
            throw InvalidInput("EngineConfig: coverage_samples must be positive");
        }
        if (workers == 0) {
            throw InvalidInput("EngineConfig: workers must be positive");
        }
    }

    bool uses_coverage_rule() const {
        return rebranch_coverage_threshold > 0.0 && (accel.has(Accel::bmi) || accel.has(Accel::bmw));
    }
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class Path { reused, tolerated_lb, tolerated_rsr, tolerated_inn, incremental, recomputed, rebranched };

inline const char* to_string(Path p) {
    switch (p) {
    case Path::reused:
        return "reused";
    case Path::tolerated_lb:
        return "tolerated_lb";
    case Path::tolerated_rsr:
        return "tolerated_rsr";
    case Path::tolerated_inn:
        return "tolerated_inn";
    case Path::incremental:
        return "incremental";
    case Path::recomputed:
        return "recomputed";
    case Path::rebranched:
        return "rebranched";
    }
    return "?";
}

struct BranchRecord {
    std::uint64_t id = 0;
    Path path = Path::recomputed;
    Status status = Status::unknown;
};

struct StepReport {
    std::size_t t = 0;
    std::vector<BranchRecord> per_branch;
    Status status = Status::unknown;
    double wall_ms = 0.0;
    double coverage = 0.0;
    std::size_t reach_calls = 0;
    std::optional<Vector> witness;

    std::size_t count(Path p) const {
        return static_cast<std::size_t>(
            std::count_if(per_branch.begin(), per_branch.end(), [p](const BranchRecord& r) { return r.path == p; }));
    }
};

// ---------------------------------------------------------------------------
// Tolerance checks and certificates
// ---------------------------------------------------------------------------

/// Relaxes `region` by `offset`, reaches its bounding box with `reach` and
/// keeps the certificate only if every spec margin is non-negative.
inline std::optional<RelaxedCertificate> rsr_build_region(const Polytope& region, const OutputSpec& spec,
                                                          double offset, std::size_t t, const ReachFn& reach,
                                                          std::size_t* reach_calls = nullptr) {
    if (!(offset >= 0.0)) {
        throw InvalidInput("rsr_build: offset must be non-negative");
    }
    Polytope relaxed = region.relaxed(offset);
    IntervalBox box = bounding_box(relaxed);
    ReachResult r = reach(box);
    if (reach_calls) {
        ++*reach_calls;
    }
    Verdict v;
    v.margins = margins(r.output(), spec);
    if (!all_nonnegative(v.margins)) {
        return std::nullopt;
    }
    v.status = Status::hold;
    return RelaxedCertificate{std::move(relaxed), std::move(r), t, std::move(v)};
}

/// Relaxes every constraint constant of the branch by `offset` and keeps the
/// result only if the relaxed reach still satisfies the spec.
inline std::optional<RelaxedCertificate> rsr_build(const Branch& branch, const Network& net, const OutputSpec& spec,
                                                   double offset, std::size_t t = 0) {
    if (branch.verdict.status != Status::hold) {
        throw InvalidState("rsr_build: branch does not hold");
    }
    return rsr_build_region(branch.region, spec, offset, t, plain_reach(net));
}

inline bool rsr_tolerable(const Polytope& region_t, const RelaxedCertificate& cert) {
    return subset_check(region_t, cert.relaxed_region, false).contained;
}

/// Whether `region_t` stays within the branch's Lipschitz threshold of the
/// region the threshold was computed on. Uses the exact box distance when
/// both sets are boxes, else the anchored bound (anchor cached on the branch),
/// else vertex enumeration when `region_t` is low-dimensional.
inline bool lb_tolerable(Branch& branch, const Polytope& region_t, std::size_t vertex_cap = 6) {
    if (!branch.lb_delta || !branch.lb_region) {
        throw InvalidState("lb_tolerable: branch has no Lipschitz threshold");
    }
    const double delta = *branch.lb_delta;
    const Polytope& ref = *branch.lb_region;
    bool a1 = false, a2 = false;
    detail::closed_form_box(ref, a1);
    if (a1) {
        detail::closed_form_box(region_t, a2);
    }
    if (a1 && a2) {
        return set_distance_upper(ref, region_t) <= delta;
    }
    if (!branch.lb_anchor) {
        const IntervalBox box = branch.lb_box ? *branch.lb_box : bounding_box(ref);
        if (auto anchor = make_anchor(ref, box)) {
            branch.lb_anchor = std::make_shared<const AnchoredRegion>(std::move(*anchor));
        }
    }
    if (branch.lb_anchor && anchored_distance_upper(*branch.lb_anchor, region_t) <= delta) {
        return true;
    }
    if (region_t.dim() <= vertex_cap) {
        return set_distance_upper(ref, region_t) <= delta;
    }
    return false;
}

inline bool inn_tolerable(const IntervalNetwork& inn, const Network& net) { return inn_contains(inn, net); }

// ---------------------------------------------------------------------------
// Engine internals
// ---------------------------------------------------------------------------

namespace detail {

inline ReachFn active_reach(const BranchStore& s, const Network& net, const EngineConfig& cfg) {
    if (cfg.accel.has(Accel::inn) && s.inn) {
        const IntervalNetwork* inn = &*s.inn;
        return [inn](const IntervalBox& box) { return reach_inn(*inn, box); };
    }
    return plain_reach(net);
}

inline LayerDiff inn_radius(const BranchStore& s, const EngineConfig& cfg, const Network& net) {
    LayerDiff r = cfg.inn_base_radius ? *cfg.inn_base_radius : s.observed_diff;
    if (r.per_layer.size() != net.depth()) {
        r.per_layer.assign(net.depth(), 0.0);
    }
    for (auto& v : r.per_layer) {
        v *= cfg.inn_radius_scale;
    }
    return r;
}

/// Replaces the interval network, bumping the hidden epoch unless only the
/// last layer differs.
inline void install_inn(BranchStore& s, IntervalNetwork inn) {
    bool same_hidden = s.inn && s.inn->depth() == inn.depth();
    for (std::size_t i = 0; same_hidden && i + 1 < inn.depth(); ++i) {
        same_hidden = s.inn->layer(i) == inn.layer(i);
    }
    s.inn = std::move(inn);
    ++s.inn_epoch;
    if (!same_hidden) {
        ++s.inn_hidden_epoch;
    }
}

/// Keeps an interval network containing `net` when the accelerator is on.
inline void ensure_inn(BranchStore& s, const Network& net, const EngineConfig& cfg) {
    if (!cfg.accel.has(Accel::inn)) {
        s.inn.reset();
        return;
    }
    if (s.inn && inn_tolerable(*s.inn, net)) {
        return;
    }
    install_inn(s, build_inn(net, inn_radius(s, cfg, net)));
}

inline void stamp_reach(Branch& b, const BranchStore& s, bool from_inn) {
    b.reach_current = true;
    b.reach_from_inn = from_inn;
    b.reach_hidden_epoch = s.hidden_epoch;
    b.reach_inn_epoch = s.inn_epoch;
    b.reach_inn_hidden_epoch = s.inn_hidden_epoch;
}

/// Refreshes the LB certificate epoch of a branch that was just verified.
inline void issue_lb(Branch& b, const BranchStore& s, const OutputSpec& spec, const EngineConfig& cfg,
                     std::size_t t) {
    b.lb_delta.reset();
    b.lb_region.reset();
    b.lb_box.reset();
    b.lb_anchor.reset();
    if (!cfg.accel.has(Accel::lb) || b.verdict.status != Status::hold || !b.cached_reach) {
        return;
    }
    b.lb_delta = lb_threshold(*b.cached_reach, spec, LipschitzBound{s.lipschitz});
    b.lb_region = b.region;
    b.lb_box = b.box;
    b.cert_time = t;
    b.cert_net_epoch = s.net_epoch;
}

/// Full rebuild through reach-and-branch. Returns the outcome's status.
inline Status rebuild(BranchStore& s, std::size_t t, const Polytope& input, const Network& net,
                      const OutputSpec& spec, const EngineConfig& cfg, StepReport& rep) {
    const bool from_inn = cfg.accel.has(Accel::inn) && s.inn;
    auto out = reach_and_branch(input, net, spec, cfg.limits, active_reach(s, net, cfg), s.next_id);
    rep.reach_calls += out.reach_calls;
    s.branches = std::move(out.store.branches);
    s.next_id = out.store.next_id;
    s.origin_time = t;
    ++s.generation;
    s.coverage_valid = false;
    const ReachFn fn = active_reach(s, net, cfg);
    for (auto& b : s.branches) {
        b.tag = Tag::recompute;
        b.rsr_cert.reset();
        if (!b.cached_reach) {
            continue;
        }
        stamp_reach(b, s, from_inn);
        b.cert_time = t;
        b.cert_net_epoch = s.net_epoch;
        issue_lb(b, s, spec, cfg, t);
        if (cfg.accel.has(Accel::rsr) && cfg.synchronous && b.verdict.status == Status::hold) {
            b.rsr_cert = rsr_build_region(b.region, spec, cfg.rsr_offset, t, fn, &rep.reach_calls);
        }
        rep.per_branch.push_back({b.id, Path::rebranched, b.verdict.status});
    }
    for (const auto& b : s.branches) {
        if (!b.cached_reach) {
            rep.per_branch.push_back({b.id, Path::rebranched, b.verdict.status});
        }
    }
    rep.witness = out.witness;
    return out.status;
}

inline bool coverage_below_threshold(const BranchStore& s, const EngineConfig& cfg) {
    return cfg.rebranch_coverage_threshold > 0.0 && s.coverage_valid &&
           s.last_coverage < cfg.rebranch_coverage_threshold * s.origin_coverage;
}

/// Upper bound of `a·x` over a box.
inline double box_support(const LinearConstraint& row, const IntervalBox& box) {
    double s = 0.0;
    for (std::size_t k = 0; k < row.a.size(); ++k) {
        s += row.a[k] >= 0.0 ? row.a[k] * box.hi(k) : row.a[k] * box.lo(k);
    }
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Branch management
// ---------------------------------------------------------------------------

/// Rewrites every branch's base rows to `input_t` and tags it. A branch whose
/// region provably did not change, or whose new region lies inside the old
/// one while the old verdict is hold, is reused; other branches are tagged
/// recompute. Empty branches are dropped. Rebuilds when coverage fell below
/// the threshold. `net_changed` forces recompute tags (weights moved too).
inline BranchStore bmi_update(const Polytope& input_t, BranchStore store, const EngineConfig& cfg,
                              const Network& net, const OutputSpec& spec, std::size_t t = 0,
                              bool net_changed = false) {
    if (!store.input) {
        throw InvalidState("bmi_update: store has no previous input");
    }
    const auto& old_base = store.input->base_rows();
    const auto& new_base = input_t.base_rows();
    if (old_base.size() != new_base.size() || input_t.dim() != store.input->dim()) {
        throw InvalidState("bmi_update: base row count differs from the stored input");
    }
    if (detail::coverage_below_threshold(store, cfg)) {
        StepReport scratch;
        detail::rebuild(store, t, input_t, net, spec, cfg, scratch);
        return store;
    }
    std::vector<std::size_t> changed;
    for (std::size_t i = 0; i < new_base.size(); ++i) {
        if (!(old_base[i] == new_base[i])) {
            changed.push_back(i);
        }
    }
    std::vector<Branch> kept;
    kept.reserve(store.branches.size());
    for (auto& b : store.branches) {
        if (b.region.base_rows().size() != old_base.size()) {
            throw InvalidState("bmi_update: branch base rows do not match the stored input");
        }
        if (changed.empty()) {
            b.tag = net_changed ? Tag::recompute : Tag::reuse;
            kept.push_back(std::move(b));
            continue;
        }
        Polytope region = b.region.with_base_rows(new_base);
        // A row that is strictly slack over the old box under both constants
        // cannot change the set.
        bool same_set = b.box.has_value();
        for (std::size_t k = 0; same_set && k < changed.size(); ++k) {
            const auto& o = old_base[changed[k]];
            const auto& n = new_base[changed[k]];
            same_set = o.a == n.a && detail::box_support(o, *b.box) < std::min(o.b, n.b) - kFeasibilityTol;
        }
        if (same_set) {
            b.region = std::move(region);
            b.tag = net_changed ? Tag::recompute : Tag::reuse;
            kept.push_back(std::move(b));
            continue;
        }
        // A loosened row that the old region attains (its exact box reaches
        // the face) almost always grows the region; recompute without an LP.
        bool grows = b.box_tight && b.box.has_value();
        if (grows) {
            bool loosened_face = false;
            for (std::size_t k = 0; grows && k < changed.size(); ++k) {
                const auto& o = old_base[changed[k]];
                const auto& n = new_base[changed[k]];
                grows = o.a == n.a;
                loosened_face = loosened_face ||
                                (n.b > o.b && detail::box_support(o, *b.box) >= o.b - kFeasibilityTol);
            }
            grows = grows && loosened_face;
        }
        const SubsetResult sub = grows ? SubsetResult{false, false} : subset_check(region, b.region);
        if (sub.candidate_empty) {
            continue;
        }
        b.region = std::move(region);
        b.box_tight = false;
        if (sub.contained && !net_changed && b.verdict.status == Status::hold) {
            b.tag = Tag::reuse;
        } else {
            b.tag = Tag::recompute;
            // when contained, the old box and reach still enclose the new region
            if (!sub.contained) {
                b.reach_current = false;
                b.box.reset();
            }
        }
        kept.push_back(std::move(b));
    }
    store.branches = std::move(kept);
    store.coverage_valid = store.coverage_valid && changed.empty();
    return store;
}

/// Keeps every region and tags all branches recompute; rebuilds when coverage
/// fell below the threshold.
inline BranchStore bmw_update(BranchStore store, const EngineConfig& cfg, const Polytope& input, const Network& net,
                              const OutputSpec& spec, std::size_t t = 0) {
    if (detail::coverage_below_threshold(store, cfg)) {
        StepReport scratch;
        detail::rebuild(store, t, input, net, spec, cfg, scratch);
        return store;
    }
    for (auto& b : store.branches) {
        b.tag = Tag::recompute;
    }
    return store;
}

// ---------------------------------------------------------------------------
// The step
// ---------------------------------------------------------------------------

namespace detail {

/// Records weight movement between consecutive networks.
inline void note_network(BranchStore& s, const Network& net) {
    if (s.net && same_architecture(*s.net, net)) {
        if (*s.net == net) {
            return;
        }
        const LayerDiff d = layerwise_diff(*s.net, net);
        if (s.observed_diff.per_layer.size() != d.per_layer.size()) {
            s.observed_diff = d;
        } else {
            for (std::size_t i = 0; i < d.per_layer.size(); ++i) {
                s.observed_diff.per_layer[i] = std::max(s.observed_diff.per_layer[i], d.per_layer[i]);
            }
        }
        ++s.net_epoch;
        if (!d.last_layer_only()) {
            ++s.hidden_epoch;
        }
    } else {
        s.observed_diff = LayerDiff{Vector(net.depth(), 0.0)};
        s.inn.reset();
        ++s.net_epoch;
        ++s.hidden_epoch;
    }
    s.lipschitz = lipschitz_upper(net).value;
}

/// Verifies one recompute-tagged branch, trying tolerance and incremental
/// paths first. Returns false if the branch turned out empty.
inline bool process_branch(Branch& b, BranchStore& s, std::size_t t, const Network& net, const OutputSpec& spec,
                           const EngineConfig& cfg, StepReport& rep) {
    const bool certs_valid = b.verdict.status == Status::hold && b.cert_net_epoch == s.net_epoch;
    if (certs_valid && cfg.accel.has(Accel::lb) && b.lb_delta && lb_tolerable(b, b.region)) {
        // every point of the region is within the threshold of the certified box
        if (b.lb_box) {
            const double d = *b.lb_delta;
            Vector lo = b.lb_box->lo(), hi = b.lb_box->hi();
            for (std::size_t i = 0; i < lo.size(); ++i) {
                lo[i] -= d;
                hi[i] += d;
            }
            b.box = IntervalBox(std::move(lo), std::move(hi));
        } else {
            b.box.reset();
        }
        b.box_tight = false;
        rep.per_branch.push_back({b.id, Path::tolerated_lb, b.verdict.status});
        return true;
    }
    if (certs_valid && cfg.accel.has(Accel::rsr) && b.rsr_cert && rsr_tolerable(b.region, *b.rsr_cert)) {
        b.box = b.rsr_cert->relaxed_reach.input();
        b.box_tight = false;
        rep.per_branch.push_back({b.id, Path::tolerated_rsr, b.verdict.status});
        return true;
    }
    const bool inn_on = cfg.accel.has(Accel::inn) && s.inn.has_value();
    if (inn_on && b.cached_reach && b.reach_current && b.reach_from_inn && b.reach_inn_epoch == s.inn_epoch) {
        rep.per_branch.push_back({b.id, Path::tolerated_inn, b.verdict.status});
        return true;
    }

    Path path = Path::recomputed;
    ReachResult reach;
    const bool ic_ready = cfg.accel.has(Accel::ic) && b.cached_reach && b.reach_current &&
                          b.reach_from_inn == inn_on && b.reach_hidden_epoch == s.hidden_epoch &&
                          (!inn_on || b.reach_inn_hidden_epoch == s.inn_hidden_epoch) && net.depth() >= 2;
    if (ic_ready) {
        reach = inn_on ? reach_from(*s.inn, *b.cached_reach, net.depth() - 1)
                       : reach_incremental(*b.cached_reach, net.layers().back());
        path = Path::incremental;
        ++rep.reach_calls;
    } else {
        if (!b.box || !b.box_tight) {
            try {
                b.box = bounding_box(b.region);
            } catch (const EmptySet&) {
                return false;
            }
            b.box_tight = true;
        }
        const ReachFn fn = active_reach(s, net, cfg);
        std::optional<RelaxedCertificate> cert;
        if (cfg.accel.has(Accel::rsr) && cfg.synchronous) {
            cert = rsr_build_region(b.region, spec, cfg.rsr_offset, t, fn, &rep.reach_calls);
        }
        if (cert) {
            reach = cert->relaxed_reach;
        } else {
            reach = fn(*b.box);
            ++rep.reach_calls;
        }
        b.rsr_cert = std::move(cert);
    }
    b.cached_reach = std::move(reach);
    stamp_reach(b, s, inn_on);
    b.verdict = check(*b.cached_reach, spec, net, b.region, {64, check_seed(b.id)});
    if (path == Path::incremental) {
        b.rsr_cert.reset();
    }
    b.cert_time = t;
    b.cert_net_epoch = s.net_epoch;
    issue_lb(b, s, spec, cfg, t);
    if (b.verdict.status != Status::hold) {
        b.rsr_cert.reset();
    }
    rep.per_branch.push_back({b.id, path, b.verdict.status});
    return true;
}

inline void finish_status(const BranchStore& s, StepReport& rep) {
    bool all_hold = !s.branches.empty();
    bool any_violated = false;
    for (const auto& b : s.branches) {
        all_hold = all_hold && b.verdict.status == Status::hold;
        if (b.verdict.status == Status::violated) {
            any_violated = true;
            if (!rep.witness) {
                rep.witness = b.verdict.witness;
            }
        }
    }
    rep.status = any_violated ? Status::violated : all_hold ? Status::hold : Status::unknown;
}

inline void update_coverage(BranchStore& s, const Polytope& input, const EngineConfig& cfg,
                            bool rebuilt) {
    if (!s.coverage_valid) {
        const bool all_proven = !s.branches.empty() && std::all_of(s.branches.begin(), s.branches.end(),
                                                                    [](const Branch& b) { return proven(b); });
        if (!all_proven && (!s.coverage_input || !(*s.coverage_input == input))) {
            s.coverage_points = coverage_samples(input, cfg.coverage_samples, cfg.seed * 1000003ULL + 17);
            s.coverage_input = input;
        }
        s.last_coverage = all_proven ? 1.0 : partition_coverage(s, input, s.coverage_points);
        s.coverage_valid = true;
    }
    if (rebuilt) {
        s.origin_coverage = s.last_coverage;
    }
}

} // namespace detail

/// One step of online verification. Cold start (empty store), a different
/// spec or a different architecture rebuilds through reach-and-branch.
/// Otherwise input changes go through `bmi_update` and weight changes through
/// `bmw_update` when enabled, and every recompute-tagged branch takes the
/// first applicable of: LB, RSR, INN tolerance, incremental, full reach.
inline std::pair<StepReport, BranchStore> online_step(std::size_t t, const Polytope& input, const Network& net,
                                                      const OutputSpec& spec, BranchStore store,
                                                      const EngineConfig& cfg) {
    cfg.validate();
    if (input.dim() != net.input_dim()) {
        throw InvalidInput("online_step: input dimension does not match the network");
    }
    spec.validate(net.output_dim());
    StepReport rep;
    rep.t = t;
    const auto start = std::chrono::steady_clock::now();

    bool rebuild = !store.net || !store.input || !store.spec || !(*store.spec == spec) ||
                   store.input->dim() != input.dim() || !same_architecture(*store.net, net);
    const bool input_changed = !rebuild && !(*store.input == input);
    const bool net_changed = !rebuild && !(*store.net == net);
    if (!rebuild) {
        const bool bmi = cfg.accel.has(Accel::bmi);
        const bool bmw = cfg.accel.has(Accel::bmw);
        rebuild = (input_changed && !bmi) || (net_changed && !bmw) || (!input_changed && !net_changed && !bmi && !bmw) ||
                  (input_changed && store.input->base_rows().size() != input.base_rows().size()) ||
                  detail::coverage_below_threshold(store, cfg);
    }
    detail::note_network(store, net);
    detail::ensure_inn(store, net, cfg);

    if (rebuild) {
        detail::rebuild(store, t, input, net, spec, cfg, rep);
    } else {
        if (input_changed) {
            store = bmi_update(input, std::move(store), cfg, net, spec, t, net_changed);
        } else if (net_changed) {
            store = bmw_update(std::move(store), cfg, input, net, spec, t);
        } else {
            for (auto& b : store.branches) {
                b.tag = Tag::reuse;
            }
        }
        std::vector<Branch> kept;
        kept.reserve(store.branches.size());
        bool violated = false;
        bool any_recompute = false;
        for (auto& b : store.branches) {
            if (violated && b.tag == Tag::recompute) {
                // left unverified after a violation
                b.verdict = Verdict{};
                b.reach_current = false;
                kept.push_back(std::move(b));
                continue;
            }
            if (b.tag == Tag::reuse) {
                rep.per_branch.push_back({b.id, Path::reused, b.verdict.status});
                kept.push_back(std::move(b));
                continue;
            }
            if (!detail::process_branch(b, store, t, net, spec, cfg, rep)) {
                any_recompute = true;
                continue;
            }
            const Path taken = rep.per_branch.back().path;
            any_recompute = any_recompute || taken == Path::recomputed || taken == Path::incremental;
            violated = violated || b.verdict.status == Status::violated;
            kept.push_back(std::move(b));
        }
        store.branches = std::move(kept);
        if (any_recompute) {
            store.coverage_valid = false;
        }
    }
    store.input = input;
    store.net = net;
    store.spec = spec;
    detail::finish_status(store, rep);

    const bool timed_coverage = cfg.uses_coverage_rule();
    if (timed_coverage) {
        detail::update_coverage(store, input, cfg, rebuild);
    }
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!timed_coverage && (cfg.track_coverage || rebuild)) {
        detail::update_coverage(store, input, cfg, rebuild);
    }
    rep.coverage = store.coverage_valid ? store.last_coverage : 0.0;
    return {std::move(rep), std::move(store)};
}

// ---------------------------------------------------------------------------
// Background construction
// ---------------------------------------------------------------------------

/// Fixed-size worker pool running independent jobs.
class WorkerPool {
  public:
    explicit WorkerPool(std::size_t workers) {
        if (workers == 0) {
            throw InvalidInput("WorkerPool: at least one worker required");
        }
        for (std::size_t i = 0; i < workers; ++i) {
            threads_.emplace_back([this](std::stop_token st) { run(st); });
        }
    }

    ~WorkerPool() {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) {
            t.request_stop();
        }
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(std::function<void()> job) {
        {
            std::lock_guard lock(mu_);
            jobs_.push_back(std::move(job));
            ++pending_;
        }
        cv_.notify_one();
    }

    /// Blocks until every submitted job has finished.
    void wait_idle() {
        std::unique_lock lock(mu_);
        idle_cv_.wait(lock, [this] { return pending_ == 0; });
    }

  private:
    void run(std::stop_token st) {
        for (;;) {
            std::function<void()> job;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] { return stopping_ || !jobs_.empty() || st.stop_requested(); });
                if (jobs_.empty()) {
                    return;
                }
                job = std::move(jobs_.front());
                jobs_.pop_front();
            }
            job();
            {
                std::lock_guard lock(mu_);
                --pending_;
            }
            idle_cv_.notify_all();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<std::function<void()>> jobs_;
    std::size_t pending_ = 0;
    bool stopping_ = false;
    std::vector<std::jthread> threads_;
};

/// Certificates produced off the stepping thread. Each result remembers the
/// store generation and branch state it was built from; `install` drops
/// anything that no longer matches.
class BackgroundRefresh {
  public:
    explicit BackgroundRefresh(std::size_t workers) : pool_(workers) {}

    /// Schedules RSR certificates for hold branches lacking one and, when the
    /// interval network is enabled, a fresh interval network centred on `net`
    /// with per-branch reach results.
    void schedule(const BranchStore& store, const Network& net, const OutputSpec& spec, const EngineConfig& cfg,
                  std::size_t t) {
        if (cfg.accel.has(Accel::rsr)) {
            std::shared_ptr<const IntervalNetwork> inn;
            std::shared_ptr<const Network> net_copy;
            std::shared_ptr<const OutputSpec> spec_copy;
            for (const auto& b : store.branches) {
                if (b.verdict.status != Status::hold || b.rsr_cert || in_flight_.count(b.id)) {
                    continue;
                }
                in_flight_.insert(b.id);
                auto job = std::make_shared<RsrJob>(RsrJob{store.generation, b.id, store.net_epoch, b.region, {}});
                if (!net_copy) {
                    if (cfg.accel.has(Accel::inn) && store.inn) {
                        inn = std::make_shared<const IntervalNetwork>(*store.inn);
                    }
                    net_copy = std::make_shared<const Network>(net);
                    spec_copy = std::make_shared<const OutputSpec>(spec);
                }
                pending_.push_back([this, job, inn, net_copy, spec_copy, offset = cfg.rsr_offset, t] {
                    const OutputSpec& spec = *spec_copy;
                    ReachFn fn = inn ? ReachFn([inn](const IntervalBox& x) { return reach_inn(*inn, x); })
                                     : plain_reach(*net_copy);
                    try {
                        job->cert = rsr_build_region(job->region, spec, offset, t, fn);
                    } catch (const Error&) {
                        job->cert.reset();
                    }
                    std::lock_guard lock(mu_);
                    rsr_done_.push_back(std::move(*job));
                });
            }
        }
        if (cfg.accel.has(Accel::inn) && !inn_in_flight_ && store.net_epoch != inn_scheduled_epoch_) {
            inn_in_flight_ = true;
            inn_scheduled_epoch_ = store.net_epoch;
            auto job = std::make_shared<InnJob>();
            job->generation = store.generation;
            job->inn = build_inn(net, detail::inn_radius(store, cfg, net));
            for (const auto& b : store.branches) {
                if (b.box) {
                    job->boxes.emplace_back(b.id, *b.box);
                }
            }
            pending_.push_back([this, job] {
                for (const auto& [id, box] : job->boxes) {
                    job->reaches.emplace(id, reach_inn(job->inn, box));
                }
                std::lock_guard lock(mu_);
                inn_done_.push_back(std::move(*job));
            });
        }
    }

    /// Swaps finished results into `store`; stale ones are discarded.
    /// Returns the number of certificates installed.
    std::size_t install(BranchStore& store, const Network& net, const OutputSpec& spec) {
        std::vector<RsrJob> rsr;
        std::vector<InnJob> inn;
        {
            std::lock_guard lock(mu_);
            rsr.swap(rsr_done_);
            inn.swap(inn_done_);
        }
        std::size_t installed = 0;
        for (auto& job : rsr) {
            in_flight_.erase(job.branch_id);
            if (!job.cert || job.generation != store.generation || job.net_epoch != store.net_epoch) {
                continue;
            }
            for (auto& b : store.branches) {
                if (b.id == job.branch_id && b.region == job.region && b.verdict.status == Status::hold) {
                    b.rsr_cert = std::move(job.cert);
                    b.cert_net_epoch = store.net_epoch;
                    ++installed;
                }
            }
        }
        for (auto& job : inn) {
            inn_in_flight_ = false;
            // the current interval network stays while it still covers `net`
            if (job.generation != store.generation || !inn_contains(job.inn, net) ||
                (store.inn && inn_tolerable(*store.inn, net))) {
                continue;
            }
            detail::install_inn(store, std::move(job.inn));
            for (auto& b : store.branches) {
                auto it = job.reaches.find(b.id);
                if (it == job.reaches.end() || !b.box || !(it->second.input() == *b.box)) {
                    continue;
                }
                b.cached_reach = std::move(it->second);
                detail::stamp_reach(b, store, true);
                Verdict v;
                v.margins = margins(b.cached_reach->output(), spec);
                v.status = all_nonnegative(v.margins) ? Status::hold : Status::unknown;
                if (b.verdict.status != Status::violated) {
                    b.verdict = std::move(v);
                }
                ++installed;
            }
            store.coverage_valid = false;
        }
        return installed;
    }

    /// Hands jobs collected by `schedule` to the workers. Kept separate so a
    /// single-core host does not bill worker time to the caller's step.
    void dispatch() {
        for (auto& job : pending_) {
            pool_.submit(std::move(job));
        }
        pending_.clear();
    }

    void wait_idle() {
        dispatch();
        pool_.wait_idle();
    }

  private:
    struct RsrJob {
        std::uint64_t generation = 0;
        std::uint64_t branch_id = 0;
        std::uint64_t net_epoch = 0;
        Polytope region{1};
        std::optional<RelaxedCertificate> cert;
    };
    struct InnJob {
        std::uint64_t generation = 0;
        IntervalNetwork inn;
        std::vector<std::pair<std::uint64_t, IntervalBox>> boxes;
        std::map<std::uint64_t, ReachResult> reaches;
    };

    std::mutex mu_;
    std::vector<RsrJob> rsr_done_;
    std::vector<InnJob> inn_done_;
    std::set<std::uint64_t> in_flight_;
    bool inn_in_flight_ = false;
    std::uint64_t inn_scheduled_epoch_ = 0;
    std::vector<std::function<void()>> pending_;
    // declared last so workers stop before the queues above are destroyed
    WorkerPool pool_;
};

/// Stateful wrapper around `online_step` that owns the branch store and, in
/// asynchronous mode, a background pool whose results are installed at the
/// start of each step.
class OnlineVerifier {
  public:
    explicit OnlineVerifier(EngineConfig cfg, BranchStore store = {}) : cfg_(std::move(cfg)), store_(std::move(store)) {
        cfg_.validate();
        if (!cfg_.synchronous && (cfg_.accel.has(Accel::rsr) || cfg_.accel.has(Accel::inn))) {
            background_ = std::make_unique<BackgroundRefresh>(cfg_.workers);
        }
    }

    StepReport step(std::size_t t, const Polytope& input, const Network& net, const OutputSpec& spec) {
        using clock = std::chrono::steady_clock;
        double extra_ms = 0.0;
        if (background_) {
            const auto start = clock::now();
            background_->install(store_, net, spec);
            extra_ms += std::chrono::duration<double, std::milli>(clock::now() - start).count();
        }
        // online_step times itself, leaving untimed coverage tracking out
        auto [rep, next] = online_step(t, input, net, spec, std::move(store_), cfg_);
        store_ = std::move(next);
        if (background_) {
            const auto start = clock::now();
            background_->schedule(store_, net, spec, cfg_, t);
            extra_ms += std::chrono::duration<double, std::milli>(clock::now() - start).count();
            background_->dispatch();
        }
        rep.wall_ms += extra_ms;
        return rep;
    }

    /// Blocks until queued background work has finished; results are
    /// installed at the start of the next step.
    void wait_background() {
        if (background_) {
            background_->wait_idle();
        }
    }

    bool has_background() const { return background_ != nullptr; }

    /// Waits for background work and installs it (tests and shutdown).
    void settle(const Network& net, const OutputSpec& spec) {
        if (background_) {
            background_->wait_idle();
            background_->install(store_, net, spec);
        }
    }

    const BranchStore& store() const { return store_; }
    const EngineConfig& config() const { return cfg_; }

  private:
    EngineConfig cfg_;
    BranchStore store_;
    std::unique_ptr<BackgroundRefresh> background_;
};

// ---------------------------------------------------------------------------
// Real-time planner
// ---------------------------------------------------------------------------

struct PlannerInput {
    double build_time = 1.0; ///< T
    double change_gap = 0.1; ///< Δt
    /// Per-dimension time a certificate stays valid after its snapshot.
    Vector headroom;

    void validate() const {
        if (!(build_time > 0.0) || !(change_gap > 0.0)) {
            throw InvalidInput("PlannerInput: build time and change gap must be positive");
        }
        if (headroom.empty()) {
            throw InvalidInput("PlannerInput: headroom must be non-empty");
        }
        for (double h : headroom) {
            if (!(h > 0.0)) {
                throw InvalidInput("PlannerInput: headroom entries must be positive");
            }
        }
    }

    double min_headroom() const { return *std::min_element(headroom.begin(), headroom.end()); }
};

/// `ceil((min headroom − T) / Δt)`, at least 1.
inline std::size_t worker_count(const PlannerInput& p) {
    p.validate();
    const double slack = p.min_headroom() - p.build_time;
    if (!(slack > 0.0)) {
        throw InfeasibleDeadline("worker_count: headroom does not exceed the build time");
    }
    // guard against 1.0000000000000002-style rounding of exact quotients
    const double q = slack / p.change_gap;
    const double k = std::ceil(q - 1e-9 * std::max(1.0, q));
    return static_cast<std::size_t>(std::max(1.0, k));
}

struct ScheduleTrace {
    std::size_t steps_checked = 0;
    std::size_t gaps = 0;
    std::optional<double> first_gap;
    std::size_t builds = 0;
};

/// Discrete-event simulation of `workers` builders. Worker w starts its first
/// build at w·T/workers and then runs builds back to back, so a build starts
/// every T/workers seconds. A build started at s snapshots the input at s,
/// finishes at s + T and certifies every change up to s + min headroom. Each
/// change time nΔt after the warm-up window T must be covered by a finished,
/// unexpired certificate.
inline ScheduleTrace simulate_schedule(const PlannerInput& p, std::size_t workers, double horizon) {
    p.validate();
    if (workers == 0) {
        throw InvalidInput("simulate_schedule: at least one worker required");
    }
    const double T = p.build_time;
    const double H = p.min_headroom();
    const double eps = 1e-9 * std::max(1.0, horizon);

    // (finish time, expiry) of every certificate, generated in finish order
    using Event = std::pair<double, std::size_t>; // (next start, worker)
    std::priority_queue<Event, std::vector<Event>, std::greater<>> free_at;
    for (std::size_t w = 0; w < workers; ++w) {
        free_at.emplace(static_cast<double>(w) * T / static_cast<double>(workers), w);
    }
    std::vector<std::pair<double, double>> certs;
    while (!free_at.empty() && free_at.top().first <= horizon) {
        auto [s, w] = free_at.top();
        free_at.pop();
        certs.emplace_back(s + T, s + H);
        free_at.emplace(s + T, w);
    }
    std::sort(certs.begin(), certs.end());

    ScheduleTrace trace;
    trace.builds = certs.size();
    double best_expiry = -kInf;
    std::size_t next = 0;
    for (std::size_t n = 0;; ++n) {
        const double tau = static_cast<double>(n) * p.change_gap;
        if (tau > horizon) {
            break;
        }
        if (tau + eps < T) {
            continue;
        }
        while (next < certs.size() && certs[next].first <= tau + eps) {
            best_expiry = std::max(best_expiry, certs[next].second);
            ++next;
        }
        ++trace.steps_checked;
        if (best_expiry + eps < tau) {
            ++trace.gaps;
            if (!trace.first_gap) {
                trace.first_gap = tau;
            }
        }
    }
    return trace;
}

} // namespace onv
