#include <gtest/gtest.h>

#include "onv/engine.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace onv;
using namespace onv::testing;

namespace {

/// Engine configuration with the coverage rebuild rule off.
EngineConfig config(AccelSet accel) {
    EngineConfig cfg;
    cfg.accel = accel;
    cfg.rebranch_coverage_threshold = 0.0;
    cfg.coverage_samples = 500;
    return cfg;
}

std::pair<StepReport, BranchStore> step(std::size_t t, const Polytope& input, const Network& net,
                                        const OutputSpec& spec, BranchStore store, const EngineConfig& cfg) {
    return online_step(t, input, net, spec, std::move(store), cfg);
}

Branch hold_branch(const Network& net, const OutputSpec& spec, const Polytope& region) {
    Branch b;
    b.region = region;
    b.box = bounding_box(region);
    b.cached_reach = reach_interval(net, *b.box);
    b.verdict = check(*b.cached_reach, spec, net, region);
    return b;
}

Path path_of(const StepReport& rep, std::uint64_t id) {
    for (const auto& r : rep.per_branch) {
        if (r.id == id) {
            return r.path;
        }
    }
    ADD_FAILURE() << "branch " << id << " missing from report";
    return Path::rebranched;
}

/// y = relu(w·x) followed by an identity output layer.
Network gain_net(double w) {
    return Network({Layer{Matrix::from_rows({{w}}), {0.0}, Activation::relu},
                    Layer{Matrix::from_rows({{1.0}}), {0.0}, Activation::linear}});
}

} // namespace

TEST(AccelSet, ParseAndPrint) {
    const AccelSet s = AccelSet::parse("bmi, lb,rsr");
    EXPECT_TRUE(s.has(Accel::bmi));
    EXPECT_TRUE(s.has(Accel::lb));
    EXPECT_FALSE(s.has(Accel::inn));
    EXPECT_EQ(s.to_string(), "bmi+rsr+lb");
    EXPECT_TRUE(AccelSet::parse("").empty());
    EXPECT_TRUE(AccelSet::parse("none").empty());
    EXPECT_EQ(AccelSet{}.to_string(), "baseline");
    EXPECT_THROW(AccelSet::parse("bmi,fast"), InvalidInput);
}

TEST(EngineConfig, RejectsOutOfRangeKnobs) {
    EngineConfig cfg;
    cfg.rebranch_coverage_threshold = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg.rebranch_coverage_threshold = 0.5;
    cfg.rsr_offset = -1.0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(OnlineStep, ColdStartRebranches) {
    const auto [rep, store] = step(0, interval(-5.0, 3.0), abs_net(), interval_spec(0.0, 6.0), {}, config({}));
    EXPECT_EQ(rep.status, Status::hold);
    ASSERT_EQ(store.branches.size(), 2U);
    EXPECT_EQ(rep.count(Path::rebranched), 2U);
    EXPECT_EQ(rep.reach_calls, 3U);
    EXPECT_EQ(rep.coverage, 1.0);
}

TEST(OnlineStep, NoChangeReusesEverything) {
    const auto cfg = config({Accel::bmi});
    const Polytope input = interval(-5.0, 3.0);
    auto [r0, s0] = step(0, input, abs_net(), interval_spec(0.0, 6.0), {}, cfg);
    auto [r1, s1] = step(1, input, abs_net(), interval_spec(0.0, 6.0), s0, cfg);
    EXPECT_EQ(r1.count(Path::reused), s0.branches.size());
    EXPECT_EQ(r1.reach_calls, 0U);
    for (std::size_t i = 0; i < s0.branches.size(); ++i) {
        EXPECT_EQ(s1.branches[i].verdict.status, s0.branches[i].verdict.status);
        EXPECT_EQ(s1.branches[i].verdict.margins, s0.branches[i].verdict.margins);
    }
}

TEST(OnlineStep, BaselineRebuildsEveryStep) {
    const auto cfg = config({});
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), interval_spec(0.0, 6.0), {}, cfg);
    auto [r1, s1] = step(1, interval(-5.0, 3.0), abs_net(), interval_spec(0.0, 6.0), s0, cfg);
    EXPECT_EQ(r1.count(Path::rebranched), 2U);
    EXPECT_EQ(r1.reach_calls, 3U);
    EXPECT_EQ(s1.origin_time, 1U);
}

TEST(OnlineStep, GrowingInputRecomputesOnlyTheMovedBranch) {
    const auto cfg = config({Accel::bmi});
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    ASSERT_EQ(s0.branches.size(), 2U);
    EXPECT_EQ(*s0.branches[0].box, IntervalBox({-5.0}, {-1.0}));
    EXPECT_EQ(*s0.branches[1].box, IntervalBox({-1.0}, {3.0}));

    auto [r1, s1] = step(1, interval(-6.0, 3.0), abs_net(), spec, s0, cfg);
    EXPECT_EQ(path_of(r1, s0.branches[0].id), Path::recomputed);
    EXPECT_EQ(path_of(r1, s0.branches[1].id), Path::reused);
    EXPECT_EQ(r1.reach_calls, 1U);
    EXPECT_EQ(r1.status, Status::hold);
    EXPECT_EQ(s1.branches[0].cached_reach->output(), IntervalBox({1.0}, {6.0}));
}

TEST(BmiUpdate, ShrinkingInputIsReused) {
    const auto cfg = config({Accel::bmi});
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    const BranchStore s1 = bmi_update(interval(-4.0, 3.0), s0, cfg, abs_net(), spec);
    for (const auto& b : s1.branches) {
        EXPECT_EQ(b.tag, Tag::reuse);
        EXPECT_EQ(b.region.base_rows(), interval(-4.0, 3.0).base_rows());
    }
    EXPECT_EQ(s1.branches[0].region.split_rows(), s0.branches[0].region.split_rows());
}

TEST(BmiUpdate, GrowingInputTagsOnlyTouchingBranches) {
    const auto cfg = config({Accel::bmi});
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    const BranchStore s1 = bmi_update(interval(-6.0, 3.0), s0, cfg, abs_net(), spec);
    EXPECT_EQ(s1.branches[0].tag, Tag::recompute);
    EXPECT_EQ(s1.branches[1].tag, Tag::reuse);
}

TEST(BmiUpdate, RowCountMismatchIsInvalidState) {
    const auto cfg = config({Accel::bmi});
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    Polytope more = interval(-5.0, 3.0);
    more.add_base({1.0}, 2.0);
    EXPECT_THROW(bmi_update(more, s0, cfg, abs_net(), spec), InvalidState);
    // the engine falls back to a rebuild instead
    auto [r1, s1] = step(1, more, abs_net(), spec, s0, cfg);
    EXPECT_EQ(r1.count(Path::rebranched), s1.branches.size());
}

TEST(BmiUpdate, LowCoverageRebuildsAtCurrentTime) {
    EngineConfig cfg = config({Accel::bmi});
    cfg.rebranch_coverage_threshold = 0.95;
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    s0.last_coverage = 0.5;
    const BranchStore s1 = bmi_update(interval(-5.5, 3.0), s0, cfg, abs_net(), spec, 7);
    EXPECT_EQ(s1.origin_time, 7U);
    EXPECT_EQ(s1.generation, s0.generation + 1);
    for (const auto& b : s1.branches) {
        EXPECT_EQ(b.region.base_rows(), interval(-5.5, 3.0).base_rows());
    }
}

TEST(BmwUpdate, KeepsRegionsAndTagsRecompute) {
    EngineConfig cfg = config({Accel::bmw});
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    const BranchStore s1 = bmw_update(s0, cfg, interval(-5.0, 3.0), abs_net(), spec);
    ASSERT_EQ(s1.branches.size(), s0.branches.size());
    for (std::size_t i = 0; i < s1.branches.size(); ++i) {
        EXPECT_EQ(s1.branches[i].region, s0.branches[i].region);
        EXPECT_EQ(s1.branches[i].tag, Tag::recompute);
    }
    cfg.rebranch_coverage_threshold = 0.95;
    s0.last_coverage = 0.1;
    EXPECT_EQ(bmw_update(s0, cfg, interval(-5.0, 3.0), abs_net(), spec, 3).origin_time, 3U);
}

TEST(BmwUpdate, SplittingIsNetworkIndependent) {
    // a small weight change keeps every verdict, so rebuilding yields the kept regions
    EngineConfig cfg = config({Accel::bmw});
    const auto spec = interval_spec(0.0, 6.0);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    auto layers = abs_net().layers();
    layers[1].weights(0, 0) = 1.02;
    const Network moved(layers);
    const BranchStore kept = bmw_update(s0, cfg, interval(-5.0, 3.0), moved, spec);
    const auto rebuilt = reach_and_branch(interval(-5.0, 3.0), moved, spec, cfg.limits);
    ASSERT_EQ(kept.branches.size(), rebuilt.store.branches.size());
    for (std::size_t i = 0; i < kept.branches.size(); ++i) {
        EXPECT_EQ(kept.branches[i].region, rebuilt.store.branches[i].region);
    }
}

TEST(RsrBuild, Examples) {
    const auto spec = interval_spec(0.0, 7.0);
    const Branch b = hold_branch(abs_net(), spec, interval(-5.0, -1.0));
    ASSERT_EQ(b.verdict.status, Status::hold);

    const auto cert = rsr_build(b, abs_net(), spec, 1.0);
    ASSERT_TRUE(cert);
    EXPECT_EQ(bounding_box(cert->relaxed_region), IntervalBox({-6.0}, {0.0}));
    EXPECT_EQ(cert->verdict.status, Status::hold);

    const auto same = rsr_build(b, abs_net(), spec, 0.0);
    ASSERT_TRUE(same);
    EXPECT_EQ(same->relaxed_region, b.region);
    EXPECT_EQ(same->relaxed_reach.output(), b.cached_reach->output());

    // [-8, 2] reaches |x| up to 8 > 7
    EXPECT_FALSE(rsr_build(b, abs_net(), spec, 3.0));
    Branch unknown = b;
    unknown.verdict.status = Status::unknown;
    EXPECT_THROW(rsr_build(unknown, abs_net(), spec, 1.0), InvalidState);
}

TEST(RsrTolerable, Examples) {
    const auto spec = interval_spec(0.0, 7.0);
    const Branch b = hold_branch(abs_net(), spec, interval(-5.0, -1.0));
    const auto cert = *rsr_build(b, abs_net(), spec, 1.0);
    EXPECT_TRUE(rsr_tolerable(interval(-6.0, -1.0), cert));
    EXPECT_FALSE(rsr_tolerable(interval(-7.0, -1.0), cert));
    EXPECT_TRUE(rsr_tolerable(b.region, cert));
}

TEST(LbTolerable, Examples) {
    Branch b;
    b.region = interval(-5.0, -1.0);
    EXPECT_THROW(lb_tolerable(b, interval(-6.0, -1.0)), InvalidState);
    b.lb_delta = 1.0;
    b.lb_region = b.region;
    EXPECT_TRUE(lb_tolerable(b, interval(-6.0, -1.0)));
    EXPECT_FALSE(lb_tolerable(b, interval(-6.5, -1.0)));
    EXPECT_TRUE(lb_tolerable(b, interval(-5.0, -1.0)));
}

TEST(LbTolerable, CoupledRegionsUseTheAnchoredBound) {
    Polytope p = Polytope::from_box(IntervalBox({0.0, 0.0}, {2.0, 2.0}));
    p.add_base({1.0, 1.0}, 3.0);
    Branch b;
    b.region = p;
    b.lb_region = p;
    b.lb_box = bounding_box(p);
    b.lb_delta = 0.3;
    std::vector<LinearConstraint> rows = p.base_rows();
    rows.back().b = 3.1;
    EXPECT_TRUE(lb_tolerable(b, p.with_base_rows(rows)));
    EXPECT_TRUE(b.lb_anchor);
    rows.back().b = 4.0;
    EXPECT_FALSE(lb_tolerable(b, p.with_base_rows(rows)));
}

TEST(InnTolerable, Examples) {
    const Network center = scalar_net(-2.0, 0.0, Activation::linear);
    const IntervalNetwork inn = build_inn(center, LayerDiff{{0.1}});
    EXPECT_TRUE(inn_tolerable(inn, center));
    EXPECT_TRUE(inn_tolerable(inn, scalar_net(-2.1, 0.0, Activation::linear)));
    EXPECT_FALSE(inn_tolerable(inn, scalar_net(-2.2, 0.0, Activation::linear)));
}

TEST(OnlineStep, WeightChangeInsideIntervalNetworkNeedsNoReach) {
    EngineConfig cfg = config({Accel::bmw, Accel::inn});
    cfg.inn_base_radius = LayerDiff{{0.02, 0.0}};
    cfg.inn_radius_scale = 5.0;
    const auto spec = interval_spec(-1.0, 7.0);
    auto [r0, s0] = step(0, interval(0.0, 3.0), gain_net(2.0), spec, {}, cfg);
    EXPECT_EQ(r0.status, Status::hold);
    auto [r1, s1] = step(1, interval(0.0, 3.0), gain_net(2.1), spec, s0, cfg);
    EXPECT_EQ(r1.count(Path::tolerated_inn), s1.branches.size());
    EXPECT_EQ(r1.reach_calls, 0U);
    EXPECT_EQ(r1.status, Status::hold);
    // outside the intervals the network is rebuilt around the new weights
    auto [r2, s2] = step(2, interval(0.0, 3.0), gain_net(2.2), spec, s1, cfg);
    EXPECT_EQ(r2.count(Path::recomputed), s2.branches.size());
    EXPECT_TRUE(inn_contains(*s2.inn, gain_net(2.2)));
}

TEST(OnlineStep, LastLayerChangeIsIncremental) {
    EngineConfig cfg = config({Accel::bmw, Accel::ic});
    const auto spec = interval_spec(-1.0, 7.0);
    auto [r0, s0] = step(0, interval(0.0, 3.0), gain_net(2.0), spec, {}, cfg);
    auto layers = gain_net(2.0).layers();
    layers[1].weights(0, 0) = 1.1;
    const Network tuned(layers);
    auto [r1, s1] = step(1, interval(0.0, 3.0), tuned, spec, s0, cfg);
    EXPECT_EQ(r1.count(Path::incremental), s1.branches.size());
    EXPECT_EQ(s1.branches[0].cached_reach->output(), reach_interval(tuned, *s1.branches[0].box).output());
    // a hidden-layer change needs the full path
    auto [r2, s2] = step(2, interval(0.0, 3.0), tuned.with_layer(0, gain_net(2.05).layer(0)), spec, s1, cfg);
    EXPECT_EQ(r2.count(Path::recomputed), s2.branches.size());
}

TEST(OnlineStep, ToleranceOrderIsLbThenRsr) {
    EngineConfig cfg = config({Accel::bmi, Accel::lb, Accel::rsr});
    cfg.rsr_offset = 0.5;
    const auto spec = interval_spec(0.0, 8.0);
    auto [r0, s0] = step(0, interval(-5.0, -1.0), abs_net(), spec, {}, cfg);
    ASSERT_EQ(s0.branches.size(), 1U);
    // reach [1, 5]: smallest margin 1, ‖c‖₁ = 1, L = 1·2
    EXPECT_DOUBLE_EQ(*s0.branches[0].lb_delta, 0.5);
    ASSERT_TRUE(s0.branches[0].rsr_cert);

    auto [r1, s1] = step(1, interval(-5.4, -1.0), abs_net(), spec, s0, cfg);
    EXPECT_EQ(path_of(r1, s0.branches[0].id), Path::tolerated_lb);
    EXPECT_EQ(r1.reach_calls, 0U);

    EngineConfig rsr_only = config({Accel::bmi, Accel::rsr});
    rsr_only.rsr_offset = 0.5;
    auto [q0, t0] = step(0, interval(-5.0, -1.0), abs_net(), spec, {}, rsr_only);
    auto [q1, t1] = step(1, interval(-5.4, -1.0), abs_net(), spec, t0, rsr_only);
    EXPECT_EQ(path_of(q1, t0.branches[0].id), Path::tolerated_rsr);
    auto [q2, t2] = step(2, interval(-5.6, -1.0), abs_net(), spec, t1, rsr_only);
    EXPECT_EQ(path_of(q2, t0.branches[0].id), Path::recomputed);
}

TEST(OnlineStep, ViolationCarriesWitness) {
    const auto cfg = config({Accel::bmi});
    const OutputSpec spec = interval_spec(0.0, 4.0);
    auto [r0, s0] = step(0, interval(-3.0, 2.0), abs_net(), spec, {}, cfg);
    EXPECT_EQ(r0.status, Status::hold);
    auto [r1, s1] = step(1, interval(-5.0, 2.0), abs_net(), spec, s0, cfg);
    ASSERT_EQ(r1.status, Status::violated);
    ASSERT_TRUE(r1.witness);
    EXPECT_FALSE(spec.satisfied_by(forward(abs_net(), *r1.witness)));
}

TEST(OnlineStep, StatusIsHoldIffEveryBranchHolds) {
    Rng rng(11);
    const auto configs = accelerated_configs();
    for (int k = 0; k < 12; ++k) {
        const OnlineCase c = make_case(rng, static_cast<Drift>(k % 4), 3);
        for (const auto& cfg : configs) {
            BranchStore store;
            for (std::size_t t = 0; t < c.inputs.size(); ++t) {
                auto [rep, next] = online_step(t, c.inputs[t], c.nets[t], c.spec, std::move(store), cfg);
                store = std::move(next);
                bool all = !store.branches.empty();
                for (const auto& b : store.branches) {
                    all = all && b.verdict.status == Status::hold;
                }
                EXPECT_EQ(rep.status == Status::hold, all);
                EXPECT_GE(rep.coverage, 0.0);
                EXPECT_LE(rep.coverage, 1.0);
            }
        }
    }
}

TEST(OnlineStep, AcceleratorsOnlyLoseHoldVerdicts) {
    Rng rng(12);
    const auto configs = accelerated_configs();
    for (int k = 0; k < 12; ++k) {
        const OnlineCase c = make_case(rng, static_cast<Drift>(k % 4), 3);
        std::vector<Status> base;
        {
            BranchStore store;
            for (std::size_t t = 0; t < c.inputs.size(); ++t) {
                auto [rep, next] = online_step(t, c.inputs[t], c.nets[t], c.spec, std::move(store), configs[0]);
                store = std::move(next);
                base.push_back(rep.status);
            }
        }
        for (const auto& cfg : configs) {
            BranchStore store;
            for (std::size_t t = 0; t < c.inputs.size(); ++t) {
                auto [rep, next] = online_step(t, c.inputs[t], c.nets[t], c.spec, std::move(store), cfg);
                store = std::move(next);
                if (rep.status == Status::hold) {
                    EXPECT_NE(base[t], Status::violated) << cfg.accel.to_string() << " t=" << t;
                }
            }
        }
    }
}

TEST(Properties, SoundnessOfEveryPath) {
    const auto tally = soundness_suite(24, 200, 21);
    EXPECT_EQ(tally.failures, 0U);
    EXPECT_GT(tally.checked, 0U);
    for (Path p : {Path::reused, Path::tolerated_lb, Path::tolerated_rsr, Path::tolerated_inn, Path::incremental,
                   Path::recomputed, Path::rebranched}) {
        EXPECT_NE(std::find(tally.paths_seen.begin(), tally.paths_seen.end(), p), tally.paths_seen.end())
            << to_string(p) << " never exercised";
    }
}

TEST(Properties, ReusedVerdictsMatchFromScratch) {
    const auto tally = bmi_equivalence_suite(30, 22);
    EXPECT_GT(tally.checked, 30U);
    EXPECT_EQ(tally.failures, 0U);
}

TEST(Properties, RelaxedCertificateDominates) {
    const auto tally = rsr_dominance_suite(30, 23);
    EXPECT_GT(tally.checked, 10U);
    EXPECT_EQ(tally.failures, 0U);
}

TEST(Properties, LipschitzToleranceImpliesRecomputeHolds) {
    const auto tally = lb_implies_hold_suite(30, 24);
    EXPECT_GT(tally.checked, 10U);
    EXPECT_EQ(tally.failures, 0U);
}

TEST(Properties, IncrementalEqualsRecompute) {
    const auto tally = ic_equivalence_suite(200, 25);
    EXPECT_EQ(tally.failures, 0U);
}

TEST(Properties, IntervalNetworkDominates) {
    const auto tally = inn_dominance_suite(50, 26);
    EXPECT_EQ(tally.failures, 0U);
}

TEST(Background, SynchronousCertificatesMatchInlineConstruction) {
    EngineConfig cfg = config({Accel::bmi, Accel::rsr});
    cfg.rsr_offset = 0.25;
    const auto spec = interval_spec(0.0, 6.5);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    for (const auto& b : s0.branches) {
        ASSERT_TRUE(b.rsr_cert);
        const auto inline_cert = rsr_build(b, abs_net(), spec, cfg.rsr_offset);
        ASSERT_TRUE(inline_cert);
        EXPECT_EQ(b.rsr_cert->relaxed_region, inline_cert->relaxed_region);
        EXPECT_EQ(b.rsr_cert->relaxed_reach.output(), inline_cert->relaxed_reach.output());
    }
}

TEST(Background, AsynchronousCertificatesArriveBetweenSteps) {
    EngineConfig cfg = config({Accel::bmi, Accel::rsr});
    cfg.rsr_offset = 0.25;
    cfg.synchronous = false;
    cfg.workers = 2;
    const auto spec = interval_spec(0.0, 6.5);
    OnlineVerifier v(cfg);
    v.step(0, interval(-5.0, 3.0), abs_net(), spec);
    for (const auto& b : v.store().branches) {
        EXPECT_FALSE(b.rsr_cert);
    }
    v.settle(abs_net(), spec);
    for (const auto& b : v.store().branches) {
        ASSERT_TRUE(b.rsr_cert);
        EXPECT_EQ(b.rsr_cert->relaxed_region, b.region.relaxed(0.25));
    }
    const auto rep = v.step(1, interval(-5.2, 3.0), abs_net(), spec);
    EXPECT_EQ(rep.count(Path::tolerated_rsr), 1U);
    EXPECT_EQ(rep.count(Path::reused), 1U);
}

TEST(Background, StaleResultsAreDiscarded) {
    EngineConfig cfg = config({Accel::bmi, Accel::rsr});
    cfg.synchronous = false;
    const auto spec = interval_spec(0.0, 6.5);
    BackgroundRefresh bg(1);
    auto [r0, s0] = step(0, interval(-5.0, 3.0), abs_net(), spec, {}, cfg);
    bg.schedule(s0, abs_net(), spec, cfg, 0);
    bg.wait_idle();
    // a rebuild in the meantime moves the store to a new generation
    auto [r1, s1] = step(1, interval(-5.0, 3.0), abs_net(), interval_spec(-0.5, 6.5), s0, cfg);
    const BranchStore before = s1;
    EXPECT_EQ(bg.install(s1, abs_net(), spec), 0U);
    for (std::size_t i = 0; i < s1.branches.size(); ++i) {
        EXPECT_FALSE(s1.branches[i].rsr_cert);
        EXPECT_EQ(s1.branches[i].region, before.branches[i].region);
    }
}

TEST(Planner, WorkerCountExamples) {
    EXPECT_EQ(worker_count({1.0, 0.1, {2.0}}), 10U);
    EXPECT_EQ(worker_count({1.0, 0.1, {3.0, 2.0, 5.0}}), 10U);
    EXPECT_EQ(worker_count({1.0, 0.1, {1.1}}), 1U);
    EXPECT_EQ(worker_count({1.0, 0.5, {1.1}}), 1U);
    EXPECT_THROW(worker_count({1.0, 0.1, {1.0}}), InfeasibleDeadline);
    EXPECT_THROW(worker_count({1.0, 0.1, {0.5}}), InfeasibleDeadline);
    EXPECT_THROW(worker_count({0.0, 0.1, {2.0}}), InvalidInput);
}

TEST(Planner, SimulationFindsGapsExactlyWhenLaunchesAreTooSparse) {
    Rng rng(31);
    for (int k = 0; k < 200; ++k) {
        const double T = uniform(rng, 0.1, 2.0);
        const double dt = uniform(rng, 0.01, 0.5);
        const double H = T + uniform(rng, 0.05, 2.0);
        const std::size_t workers = uniform_int(rng, 1, 12);
        const auto trace = simulate_schedule({T, dt, {H}}, workers, 50.0 * T);
        // certificates launched T/workers apart leave holes of width T/workers − (H − T)
        const double hole = T / static_cast<double>(workers) - (H - T);
        if (hole <= 0.0) {
            EXPECT_EQ(trace.gaps, 0U) << T << " " << dt << " " << H << " " << workers;
        }
        if (hole > dt) {
            EXPECT_GT(trace.gaps, 0U) << T << " " << dt << " " << H << " " << workers;
        }
    }
    const auto ok = simulate_schedule({1.0, 0.1, {2.0}}, worker_count({1.0, 0.1, {2.0}}), 100.0);
    EXPECT_EQ(ok.gaps, 0U);
    EXPECT_GT(ok.steps_checked, 900U);
}
