// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "onv/harness.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace onv;
using namespace onv::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome soundness() {
    Outcome o;
    const auto start = Clock::now();
    const PropertyTally tally = soundness_suite(200, 1000, 2024);
    const double secs = seconds_since(start);
    const Path all[] = {Path::reused,       Path::tolerated_lb, Path::tolerated_rsr, Path::tolerated_inn,
                        Path::incremental, Path::recomputed,   Path::rebranched};
    for (Path p : all) {
        o.require(std::find(tally.paths_seen.begin(), tally.paths_seen.end(), p) != tally.paths_seen.end(),
                  std::string("path ") + to_string(p) + " exercised");
    }
    o.require(tally.failures == 0, "zero counterexamples");
    o.require(secs < 120.0, "runtime < 120 s");
    o.note(std::to_string(tally.checked) + " steps, " + std::to_string(tally.failures) + " counterexamples, " +
           fmt("%.1f s", secs));
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    Rng rng(2025);
    std::size_t misses = 0;
    for (int k = 0; k < 300; ++k) {
        const std::size_t in = uniform_int(rng, 1, 5);
        const Network net = random_net(rng, in, uniform_int(rng, 1, 4));
        const IntervalBox box = random_box(rng, in);
        const IntervalBox reach = reach_interval(net, box).output();
        for (int s = 0; s < 1000; ++s) {
            misses += !reach.contains(forward(net, sample_uniform(box, rng)), 1e-9);
        }
    }
    o.require(misses == 0, "sample hull inside reach box on 300 cases");

    const auto abs_reach = reach_interval(abs_net(), IntervalBox({-3.0}, {2.0})).output();
    o.require(abs_reach == IntervalBox({0.0}, {5.0}), "|x| on [-3,2] gives [0,5]");
    const auto out = reach_and_branch(interval(-3.0, 2.0), abs_net(), interval_spec(0.0, 4.0), {});
    const bool two = out.store.branches.size() == 2;
    o.require(two && out.store.branches[0].cached_reach->output() == IntervalBox({0.5}, {3.0}) &&
                  out.store.branches[1].cached_reach->output() == IntervalBox({0.0}, {2.5}),
              "split children [0.5,3] and [0,2.5]");
    o.note(std::to_string(misses) + " hull misses over 300000 samples");
    return o;
}

Outcome accelerator_properties() {
    Outcome o;
    const auto start = Clock::now();
    struct Named {
        const char* name;
        std::function<PropertyTally()> run;
    };
    const std::vector<Named> suites = {
        {"bmi reuse", [] { return bmi_equivalence_suite(100, 31); }},
        {"rsr dominance", [] { return rsr_dominance_suite(100, 32); }},
        {"lb implies hold", [] { return lb_implies_hold_suite(100, 33); }},
        {"inn dominance", [] { return inn_dominance_suite(100, 34); }},
        {"ic equivalence", [] { return ic_equivalence_suite(100, 35, 1e-12); }},
    };
    for (const auto& s : suites) {
        const PropertyTally t = s.run();
        o.require(t.checked > 0 && t.failures == 0, s.name);
        o.note(std::string(s.name) + " " + std::to_string(t.failures) + "/" + std::to_string(t.checked));
    }
    const double secs = seconds_since(start);
    o.require(secs < 300.0, "runtime < 300 s");
    o.note(fmt("%.1f s", secs));
    return o;
}

Outcome ablation() {
    Outcome o;
    struct Target {
        ScenarioKind kind;
        std::vector<std::pair<std::string, double>> speedups;
    };
    const std::vector<Target> targets = {
        {ScenarioKind::domain_shift, {{"bmi", 2.0}, {"bmi+rsr+lb", 4.0}}},
        {ScenarioKind::network_updates, {{"bmw", 2.0}, {"bmw+inn", 5.0}}},
        {ScenarioKind::fine_tuning, {{"bmw+inn+ic", 10.0}}},
    };
    for (const auto& target : targets) {
        ScenarioSpec s;
        s.kind = target.kind;
        s.seed = 1;
        const ExperimentReport rep = run_experiment(s, ablation_configs(s), 5);
        const double base_cov = rep.rows.front().mean_coverage;
        for (const auto& [method, need] : target.speedups) {
            const double x = rep.speedup(method);
            o.require(x >= need, std::string(to_string(s.kind)) + " " + method + fmt(" >= %.0fx", need));
            o.note(std::string(to_string(s.kind)) + " " + method + fmt(" %.1fx", x));
        }
        for (const auto& row : rep.rows) {
            const bool approximating = row.config.accel.has(Accel::rsr) || row.config.accel.has(Accel::inn);
            if (approximating) {
                const double drop = base_cov - row.mean_coverage;
                o.require(drop <= 0.03, row.method + " coverage drop <= 3 points");
                o.note(row.method + fmt(" drop %.2f pts", 100.0 * drop));
            }
        }
    }
    return o;
}

Outcome coverage_estimator() {
    Outcome o;
    // a hold branch over [0,1] of the input [0,2]
    BranchStore s;
    Branch b;
    b.region = interval(0.0, 1.0);
    b.box = IntervalBox({0.0}, {1.0});
    b.cached_reach = ReachResult{{*b.box}};
    b.verdict.status = Status::hold;
    s.branches.push_back(b);
    // and the 2-D analogue: the left half of a square
    BranchStore s2;
    Branch h;
    h.region = Polytope::from_box(IntervalBox({-1.0, -1.0}, {0.0, 1.0}));
    h.box = IntervalBox({-1.0, -1.0}, {0.0, 1.0});
    h.cached_reach = ReachResult{{*h.box}};
    h.verdict.status = Status::hold;
    s2.branches.push_back(h);
    const Polytope square = Polytope::from_box(IntervalBox({-1.0, -1.0}, {1.0, 1.0}));
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double c1 = coverage_rate(s, interval(0.0, 2.0), 10000, seed);
        const double c2 = coverage_rate(s2, square, 10000, seed);
        worst = std::max({worst, std::abs(c1 - 0.5), std::abs(c2 - 0.5)});
        o.require(c1 == coverage_rate(s, interval(0.0, 2.0), 10000, seed) &&
                      c2 == coverage_rate(s2, square, 10000, seed),
                  "deterministic per seed");
    }
    o.require(worst <= 0.02, "within 0.02 of 0.5");
    o.note(fmt("worst deviation %.4f over 10 seeds", worst));
    return o;
}

Outcome lipschitz_tolerance() {
    Outcome o;
    Rng rng(2026);
    std::size_t tested = 0, failures = 0;
    for (auto& hb : random_hold_branches(rng, 100)) {
        const IntervalBox box = *hb.branch.box;
        const double delta = lb_threshold(*hb.branch.cached_reach, hb.spec, lipschitz_upper(hb.net));
        const double d = 0.99 * (std::isfinite(delta) ? delta : 1.0);
        Vector lo = box.lo(), hi = box.hi();
        for (std::size_t i = 0; i < lo.size(); ++i) {
            lo[i] -= d;
            hi[i] += d;
        }
        const IntervalBox moved(lo, hi);
        // absolute slack for rounding in lo − d and hi + d
        o.require(set_distance_upper(Polytope::from_box(box), Polytope::from_box(moved)) <= d + 1e-12,
                  "perturbation distance");
        ++tested;
        for (int k = 0; k < 1000; ++k) {
            if (!hb.spec.satisfied_by(forward(hb.net, sample_uniform(moved, rng)))) {
                ++failures;
                break;
            }
        }
    }
    o.require(tested == 100 && failures == 0, "no failing branch");
    o.note(std::to_string(failures) + " failures over " + std::to_string(tested) + " branches");
    return o;
}

Outcome tradeoff() {
    Outcome o;
    ScenarioSpec s;
    s.kind = ScenarioKind::network_updates;
    s.seed = 1;
    const std::vector<double> scales = {0, 1, 2, 5, 10, 20};
    const TradeoffReport rep = sweep_tradeoff(s, TradeoffKnob::inn_radius_scale, scales, 3);
    // step times here are tens of microseconds; allow scheduler noise of 1% of a baseline step
    const double noise_ms = 0.01 * rep.baseline_time_ms;
    std::string curve;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        curve += fmt(" %g:", r.value) + fmt("%.4fms/", r.mean_time_ms) + fmt("%.4f", r.mean_coverage);
        if (i == 0) {
            continue;
        }
        const auto& p = rep.rows[i - 1];
        o.require(r.mean_coverage <= p.mean_coverage + 1e-12,
                  fmt("coverage non-increasing at scale %g", r.value));
        o.require(r.mean_time_ms <= p.mean_time_ms + noise_ms, fmt("time non-increasing at scale %g", r.value));
    }
    o.require(std::abs(rep.rows[3].mean_coverage - rep.rows[0].mean_coverage) <= 0.01,
              "scale 5 within 1 point of scale 0");
    o.note(fmt("noise band %.4f ms;", noise_ms) + curve);
    return o;
}

Outcome planner() {
    Outcome o;
    Rng rng(2027);
    std::size_t gaps = 0, gap_tuples = 0, predicted = 0;
    for (int k = 0; k < 20; ++k) {
        const double T = uniform(rng, 0.1, 2.0);
        const double dt = uniform(rng, 0.01, 0.5);
        Vector headroom(uniform_int(rng, 1, 5));
        for (auto& h : headroom) {
            h = T + uniform(rng, 0.05, 3.0);
        }
        const PlannerInput p{T, dt, headroom};
        const std::size_t workers = worker_count(p);
        const auto trace = simulate_schedule(p, workers, 60.0 * T);
        o.require(trace.steps_checked > 0, "changes checked");
        gaps += trace.gaps;
        gap_tuples += trace.gaps > 0;
        // launches T/k apart each cover H − T, so a hole opens when T/k exceeds it
        predicted += T / static_cast<double>(workers) > p.min_headroom() - T;
    }
    o.require(gaps == 0, "no certificate gap after warm-up");
    o.note(std::to_string(gaps) + " gapped changes in " + std::to_string(gap_tuples) + " of 20 tuples; " +
           std::to_string(predicted) + " tuples have T/k > headroom - T");
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"1 soundness", soundness},
        {"2 oracle equivalence", oracle_equivalence},
        {"3 accelerator properties", accelerator_properties},
        {"4 ablation speedups", ablation},
        {"5 coverage estimator", coverage_estimator},
        {"6 lipschitz tolerance", lipschitz_tolerance},
        {"7 trade-off monotonicity", tradeoff},
        {"8 real-time planner", planner},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed ? 1 : 0;
}
