#pragma once

// Benchmark runner: ablations over accelerator sets, scalability sweeps and
// trade-off curves on generated scenarios, with CSV writers for each report.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "onv/engine.hpp"
#include "onv/errors.hpp"
#include "onv/io.hpp"
#include "onv/scenario.hpp"

namespace onv {

struct MethodRow {
    std::string method;
    EngineConfig config;
    /// Timed steps `t = 1..T`; `wall_ms` is the minimum over repeats.
    std::vector<StepReport> steps;
    double mean_time_ms = 0.0;
    /// Untimed wait for background certificate construction after each step.
    double mean_background_ms = 0.0;
    double mean_coverage = 0.0;
    double mean_reach_calls = 0.0;
    std::size_t steps_hold = 0;
    std::size_t steps_unknown = 0;
    std::size_t steps_violated = 0;
};

struct ExperimentReport {
    /// Scenario as run, with the calibrated output gain filled in.
    ScenarioSpec scenario;
    std::vector<MethodRow> rows;

    const MethodRow& row(const std::string& method) const {
        for (const auto& r : rows) {
            if (r.method == method) {
                return r;
            }
        }
        throw InvalidInput("ExperimentReport: no row '" + method + "'");
    }

    /// Mean-time ratio of the first row (the baseline by convention) to `method`.
    double speedup(const std::string& method) const { return rows.at(0).mean_time_ms / row(method).mean_time_ms; }
};

/// Accelerator sets compared for each scenario kind, baseline first.
inline std::vector<AccelSet> ablation_sets(ScenarioKind kind) {
    std::vector<std::string> names;
    switch (kind) {
    case ScenarioKind::domain_shift:
    case ScenarioKind::dimming:
        names = {"baseline", "bmi", "bmi,lb", "bmi,rsr", "bmi,lb,rsr"};
        break;
    case ScenarioKind::network_updates:
        names = {"baseline", "bmw", "bmw,inn"};
        break;
    case ScenarioKind::fine_tuning:
        names = {"baseline", "bmw", "bmw,inn", "bmw,ic", "bmw,inn,ic"};
        break;
    }
    std::vector<AccelSet> out;
    for (const auto& n : names) {
        out.push_back(AccelSet::parse(n));
    }
    return out;
}

/// Engine configuration for a scenario: the scenario's branch budget and seed,
/// with certificate construction on the background pool.
inline EngineConfig scenario_config(const ScenarioSpec& s, AccelSet accel) {
    EngineConfig cfg;
    cfg.accel = accel;
    cfg.synchronous = false;
    cfg.seed = s.seed;
    cfg.limits.max_branches = s.branches;
    return cfg;
}

inline std::vector<EngineConfig> ablation_configs(const ScenarioSpec& s) {
    std::vector<EngineConfig> out;
    for (auto a : ablation_sets(s.kind)) {
        out.push_back(scenario_config(s, a));
    }
    return out;
}

/// Fixes the output gain so every later generation of `s` sees the same network.
inline ScenarioSpec with_calibrated_gain(ScenarioSpec s) {
    if (s.kind != ScenarioKind::dimming && !s.output_gain && !s.network) {
        s.output_gain = calibrate_output_gain(s);
    }
    return s;
}

/// Runs every config over a pre-generated trace: an untimed cold start at
/// `t = 0`, then timed steps `1..T`. Background work queued by a step is
/// awaited before the next one and timed separately, as if it ran on spare
/// cores. Each config is run `repeats` times and each step keeps its fastest
/// time; verdicts and coverage are deterministic.
inline std::vector<MethodRow> run_trace(const std::vector<ScenarioStep>& trace, const std::vector<EngineConfig>& configs,
                                        std::size_t repeats = 1) {
    if (configs.empty()) {
        throw InvalidInput("run_experiment: at least one config required");
    }
    if (trace.size() < 2) {
        throw InvalidInput("run_experiment: trace needs at least two steps");
    }
    if (repeats == 0) {
        throw InvalidInput("run_experiment: repeats must be positive");
    }
    std::vector<Network> nets;
    for (const auto& s : trace) {
        nets.push_back(s.net);
    }
    const LayerDiff step_diff = max_step_diff(nets);

    std::vector<MethodRow> rows;
    for (EngineConfig cfg : configs) {
        if (!cfg.inn_base_radius) {
            cfg.inn_base_radius = step_diff;
        }
        MethodRow row;
        row.method = cfg.accel.to_string();
        row.config = cfg;
        rows.push_back(std::move(row));
    }
    // Repeats are interleaved across configs so drift in machine speed hits
    // every config alike.
    std::vector<double> background(rows.size(), 0.0);
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        for (std::size_t c = 0; c < rows.size(); ++c) {
            MethodRow& row = rows[c];
            OnlineVerifier v(row.config);
            v.step(0, trace[0].input, trace[0].net, trace[0].spec);
            v.wait_background();
            for (std::size_t t = 1; t < trace.size(); ++t) {
                StepReport r = v.step(t, trace[t].input, trace[t].net, trace[t].spec);
                const auto start = std::chrono::steady_clock::now();
                v.wait_background();
                if (rep == 0) {
                    background[c] +=
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                    row.steps.push_back(std::move(r));
                } else {
                    row.steps[t - 1].wall_ms = std::min(row.steps[t - 1].wall_ms, r.wall_ms);
                }
            }
        }
    }
    for (std::size_t c = 0; c < rows.size(); ++c) {
        MethodRow& row = rows[c];
        double time = 0.0, cov = 0.0, calls = 0.0;
        for (const auto& r : row.steps) {
            time += r.wall_ms;
            cov += r.coverage;
            calls += static_cast<double>(r.reach_calls);
            switch (r.status) {
            case Status::hold:
                ++row.steps_hold;
                break;
            case Status::unknown:
                ++row.steps_unknown;
                break;
            case Status::violated:
                ++row.steps_violated;
                break;
            }
        }
        const double n = static_cast<double>(row.steps.size());
        row.mean_time_ms = time / n;
        row.mean_background_ms = background[c] / n;
        row.mean_coverage = cov / n;
        row.mean_reach_calls = calls / n;
    }
    return rows;
}

inline ExperimentReport run_experiment(const ScenarioSpec& spec, const std::vector<EngineConfig>& configs,
                                       std::size_t repeats = 1) {
    ExperimentReport rep;
    rep.scenario = with_calibrated_gain(spec);
    rep.rows = run_trace(generate(rep.scenario), configs, repeats);
    return rep;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepVariable { depth, width, branches, changing_dims, change_rate };

inline const char* to_string(SweepVariable v) {
    switch (v) {
    case SweepVariable::depth:
        return "depth";
    case SweepVariable::width:
        return "width";
    case SweepVariable::branches:
        return "branches";
    case SweepVariable::changing_dims:
        return "changing_dims";
    case SweepVariable::change_rate:
        return "change_rate";
    }
    return "?";
}

inline SweepVariable parse_sweep_variable(const std::string& s) {
    for (auto v : {SweepVariable::depth, SweepVariable::width, SweepVariable::branches, SweepVariable::changing_dims,
                   SweepVariable::change_rate}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw InvalidInput("unknown sweep variable '" + s + "'");
}

struct ScalabilityRow {
    double value = 0.0;
    std::string method;
    double baseline_ms = 0.0;
    double method_ms = 0.0;
    /// `baseline_ms / method_ms − 1`.
    double rate = 0.0;
    double coverage = 0.0;
};

struct ScalabilityReport {
    SweepVariable variable = SweepVariable::depth;
    std::vector<ScalabilityRow> rows;

    double rate(double value, const std::string& method) const {
        for (const auto& r : rows) {
            if (r.value == value && r.method == method) {
                return r.rate;
            }
        }
        throw InvalidInput("ScalabilityReport: no row for '" + method + "'");
    }
};

/// Runs the scenario's ablation at each value of `variable`. The output gain
/// is calibrated once on `base` unless the variable changes the network's
/// shape, in which case each value is calibrated separately.
inline ScalabilityReport sweep_scalability(const ScenarioSpec& base, SweepVariable variable,
                                           const std::vector<double>& values, std::size_t repeats = 1) {
    if (values.empty()) {
        throw InvalidInput("sweep_scalability: no values");
    }
    const bool reshapes = variable == SweepVariable::depth || variable == SweepVariable::width;
    const ScenarioSpec fixed = reshapes ? base : with_calibrated_gain(base);
    ScalabilityReport out;
    out.variable = variable;
    for (double v : values) {
        ScenarioSpec s = fixed;
        const auto as_count = [&] {
            if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
                throw InvalidInput(std::string("sweep_scalability: ") + to_string(variable) +
                                   " needs positive integer values");
            }
            return static_cast<std::size_t>(v);
        };
        switch (variable) {
        case SweepVariable::depth:
            s.depth = as_count();
            break;
        case SweepVariable::width:
            s.width = as_count();
            break;
        case SweepVariable::branches:
            s.branches = as_count();
            break;
        case SweepVariable::changing_dims:
            s.changing_dims = as_count();
            break;
        case SweepVariable::change_rate:
            s.change_scale = v;
            break;
        }
        const ExperimentReport rep = run_experiment(s, ablation_configs(s), repeats);
        const MethodRow& baseline = rep.rows.front();
        for (const auto& row : rep.rows) {
            out.rows.push_back({v, row.method, baseline.mean_time_ms, row.mean_time_ms,
                                baseline.mean_time_ms / row.mean_time_ms - 1.0, row.mean_coverage});
        }
    }
    return out;
}

enum class TradeoffKnob { inn_radius_scale, rsr_offset };

inline const char* to_string(TradeoffKnob k) {
    return k == TradeoffKnob::inn_radius_scale ? "inn_radius_scale" : "rsr_offset";
}

inline TradeoffKnob parse_tradeoff_knob(const std::string& s) {
    if (s == "inn_radius_scale") {
        return TradeoffKnob::inn_radius_scale;
    }
    if (s == "rsr_offset") {
        return TradeoffKnob::rsr_offset;
    }
    throw InvalidInput("unknown trade-off knob '" + s + "'");
}

struct TradeoffRow {
    double value = 0.0;
    double mean_time_ms = 0.0;
    double mean_coverage = 0.0;
};

struct TradeoffReport {
    TradeoffKnob knob = TradeoffKnob::inn_radius_scale;
    std::string method;
    double baseline_time_ms = 0.0;
    double baseline_coverage = 0.0;
    /// Coverage of the same branch-management mode without the knob's accelerator.
    double reference_coverage = 0.0;
    std::vector<TradeoffRow> rows;
};

/// Sweeps one over-approximation knob with the coverage rebuild rule off:
/// the interval-network radius scale on weight-change scenarios, the
/// relaxation offset on input-change scenarios.
inline TradeoffReport sweep_tradeoff(const ScenarioSpec& base, TradeoffKnob knob, const std::vector<double>& values,
                                     std::size_t repeats = 1) {
    if (values.empty()) {
        throw InvalidInput("sweep_tradeoff: no values");
    }
    if (!std::is_sorted(values.begin(), values.end())) {
        throw InvalidInput("sweep_tradeoff: values must be sorted ascending");
    }
    const bool weights = base.kind == ScenarioKind::network_updates || base.kind == ScenarioKind::fine_tuning;
    if (weights != (knob == TradeoffKnob::inn_radius_scale)) {
        throw InvalidInput(std::string("sweep_tradeoff: ") + to_string(knob) + " does not apply to " +
                           to_string(base.kind));
    }
    const ScenarioSpec s = with_calibrated_gain(base);
    const auto trace = generate(s);

    std::vector<EngineConfig> configs;
    configs.push_back(scenario_config(s, AccelSet{}));
    EngineConfig reference = scenario_config(s, AccelSet::parse(weights ? "bmw" : "bmi"));
    reference.rebranch_coverage_threshold = 0.0;
    configs.push_back(reference);
    for (double v : values) {
        EngineConfig cfg = scenario_config(s, AccelSet::parse(weights ? "bmw,inn" : "bmi,rsr"));
        cfg.rebranch_coverage_threshold = 0.0;
        (weights ? cfg.inn_radius_scale : cfg.rsr_offset) = v;
        configs.push_back(cfg);
    }
    const auto rows = run_trace(trace, configs, repeats);

    TradeoffReport out;
    out.knob = knob;
    out.method = configs.back().accel.to_string();
    out.baseline_time_ms = rows[0].mean_time_ms;
    out.baseline_coverage = rows[0].mean_coverage;
    out.reference_coverage = rows[1].mean_coverage;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.rows.push_back({values[i], rows[i + 2].mean_time_ms, rows[i + 2].mean_coverage});
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_report_csv(std::ostream& out, const ExperimentReport& rep) {
    out << "method,mean_time_ms,mean_coverage,steps_hold,steps_unknown,steps_violated\n";
    for (const auto& r : rep.rows) {
        out << r.method << ',' << r.mean_time_ms << ',' << r.mean_coverage << ',' << r.steps_hold << ','
            << r.steps_unknown << ',' << r.steps_violated << '\n';
    }
}

/// Per-step rows of every method, prefixed with the method name.
inline void write_steps_csv(std::ostream& out, const ExperimentReport& rep) {
    out << "method," << io::kStepHeader << '\n';
    for (const auto& r : rep.rows) {
        for (const auto& s : r.steps) {
            out << r.method << ',';
            io::write_step_row(out, s);
        }
    }
}

inline void write_scalability_csv(std::ostream& out, const ScalabilityReport& rep) {
    out << "variable,value,method,baseline_ms,method_ms,rate,coverage\n";
    for (const auto& r : rep.rows) {
        out << to_string(rep.variable) << ',' << r.value << ',' << r.method << ',' << r.baseline_ms << ','
            << r.method_ms << ',' << r.rate << ',' << r.coverage << '\n';
    }
}

inline void write_tradeoff_csv(std::ostream& out, const TradeoffReport& rep) {
    out << "knob,value,method,mean_time_ms,mean_coverage\n";
    for (const auto& r : rep.rows) {
        out << to_string(rep.knob) << ',' << r.value << ',' << rep.method << ',' << r.mean_time_ms << ','
            << r.mean_coverage << '\n';
    }
}

} // namespace onv
