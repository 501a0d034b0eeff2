// Command-line front end. Exit codes: 0 every step holds, 1 some step is
// unknown, 2 some step is violated, 3 error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "onv/harness.hpp"
#include "onv/io.hpp"

using namespace onv;

namespace {

constexpr int kExitError = 3;

struct Common {
    std::string scenario;
    std::string net;
    std::string accel;
    std::size_t branches = 0;
    std::size_t steps = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool sync = false;
    std::string dump_branches;
    std::size_t repeats = 1;
};

int exit_code(std::size_t unknown, std::size_t violated) { return violated ? 2 : unknown ? 1 : 0; }

/// Loads the scenario and applies the overriding flags.
ScenarioSpec load(const Common& c) {
    ScenarioSpec s = io::load_scenario(c.scenario);
    if (!c.net.empty()) {
        s.network = io::load_network(c.net);
    }
    if (c.branches) {
        s.branches = c.branches;
    }
    if (c.steps) {
        s.horizon = c.steps;
    }
    if (c.seed) {
        s.seed = *c.seed;
    }
    s.validate();
    return with_calibrated_gain(s);
}

/// Writes to `path`, or to stdout when it is empty.
template <class F> void emit(const std::string& path, F&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write '" + path + "'");
    }
    write(out);
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tok.size()) {
            throw InvalidInput("--values: '" + tok + "' is not a number");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw InvalidInput("--values: no values");
    }
    return out;
}

int verify_once(const Common& c) {
    const ScenarioSpec s = load(c);
    const ScenarioStep step = generate(s).front();
    const auto out = reach_and_branch(step.input, step.net, step.spec, {s.branches, 30, {}});
    double coverage = 0.0;
    try {
        coverage = coverage_rate(out.store, step.input, 2000, s.seed);
    } catch (const EstimationError&) {
        coverage = 0.0;
    }
    std::cout << "status=" << to_string(out.status) << " branches=" << out.store.branches.size()
              << " reach_calls=" << out.reach_calls << " coverage=" << coverage << '\n';
    if (out.witness) {
        StepReport rep;
        rep.status = out.status;
        rep.witness = out.witness;
        std::cout << io::witness_line(rep) << '\n';
    }
    if (!c.dump_branches.empty()) {
        io::save_branches(out.store, c.dump_branches);
    }
    return exit_code(out.status == Status::unknown, out.status == Status::violated);
}

int verify_online(const Common& c) {
    const ScenarioSpec s = load(c);
    EngineConfig cfg = scenario_config(s, AccelSet::parse(c.accel));
    cfg.synchronous = c.sync;
    const auto trace = generate(s);
    OnlineVerifier verifier(cfg);
    std::vector<StepReport> reports;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        reports.push_back(verifier.step(t, trace[t].input, trace[t].net, trace[t].spec));
    }
    verifier.settle(trace.back().net, trace.back().spec);

    std::size_t unknown = 0, violated = 0;
    emit(c.out, [&](std::ostream& os) {
        os << io::kStepHeader << '\n';
        for (const auto& r : reports) {
            io::write_step_row(os, r);
        }
    });
    for (const auto& r : reports) {
        unknown += r.status == Status::unknown;
        violated += r.status == Status::violated;
        const std::string w = io::witness_line(r, cfg.accel.to_string());
        if (!w.empty()) {
            std::cerr << w << '\n';
        }
    }
    std::cerr << "steps=" << reports.size() << " hold=" << reports.size() - unknown - violated
              << " unknown=" << unknown << " violated=" << violated << '\n';
    if (!c.dump_branches.empty()) {
        io::save_branches(verifier.store(), c.dump_branches);
    }
    return exit_code(unknown, violated);
}

std::vector<EngineConfig> bench_configs(const Common& c, const ScenarioSpec& s) {
    std::vector<EngineConfig> configs;
    if (c.accel.empty()) {
        configs = ablation_configs(s);
    } else {
        // baseline first, then each ';'-separated accelerator set
        configs.push_back(scenario_config(s, AccelSet{}));
        std::stringstream ss(c.accel);
        std::string set;
        while (std::getline(ss, set, ';')) {
            configs.push_back(scenario_config(s, AccelSet::parse(set)));
        }
    }
    for (auto& cfg : configs) {
        cfg.synchronous = c.sync;
    }
    return configs;
}

int bench_ablation(const Common& c, const std::string& steps_out) {
    const ScenarioSpec s = load(c);
    const ExperimentReport rep = run_experiment(s, bench_configs(c, s), c.repeats);
    emit(c.out, [&](std::ostream& os) { write_report_csv(os, rep); });
    if (!steps_out.empty()) {
        emit(steps_out, [&](std::ostream& os) { write_steps_csv(os, rep); });
    }
    std::size_t unknown = 0, violated = 0;
    for (const auto& r : rep.rows) {
        std::fprintf(stderr, "%-12s %10.3f ms  x%-8.2f coverage %.4f\n", r.method.c_str(), r.mean_time_ms,
                     rep.speedup(r.method), r.mean_coverage);
        unknown += r.steps_unknown;
        violated += r.steps_violated;
        for (const auto& st : r.steps) {
            const std::string w = io::witness_line(st, r.method);
            if (!w.empty()) {
                std::cerr << w << '\n';
            }
        }
    }
    return exit_code(unknown, violated);
}

int bench_scalability(const Common& c, const std::string& variable, const std::string& values) {
    const ScenarioSpec s = load(c);
    const auto rep = sweep_scalability(s, parse_sweep_variable(variable), parse_values(values), c.repeats);
    emit(c.out, [&](std::ostream& os) { write_scalability_csv(os, rep); });
    return 0;
}

int bench_tradeoff(const Common& c, const std::string& knob, const std::string& values) {
    const ScenarioSpec s = load(c);
    const auto rep = sweep_tradeoff(s, parse_tradeoff_knob(knob), parse_values(values), c.repeats);
    emit(c.out, [&](std::ostream& os) { write_tradeoff_csv(os, rep); });
    std::fprintf(stderr, "baseline coverage %.4f, reference coverage %.4f\n", rep.baseline_coverage,
                 rep.reference_coverage);
    return 0;
}

int gen_network(const Common& c, std::size_t inputs, std::size_t outputs, std::size_t depth, std::size_t width) {
    if (c.out.empty()) {
        throw InvalidInput("gen-network: --out is required");
    }
    if (depth < 1 || width < 1 || inputs < 1 || outputs < 1) {
        throw InvalidInput("gen-network: sizes must be positive");
    }
    std::vector<std::size_t> dims{inputs};
    for (std::size_t i = 0; i + 1 < depth; ++i) {
        dims.push_back(width);
    }
    dims.push_back(outputs);
    io::save_network(random_network(dims, c.seed.value_or(1)), c.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online verification of neural networks under input and weight changes"};
    app.require_subcommand(1);
    Common c;
    std::string steps_out, variable, values, knob;
    std::size_t inputs = 9, outputs = 9, depth = 3, width = 50;

    auto scenario_flags = [&](CLI::App* sub) {
        sub->add_option("--scenario", c.scenario, "Scenario JSON file")->required();
        sub->add_option("--net", c.net, "Network JSON file replacing the scenario's network");
        sub->add_option("--branches", c.branches, "Branch budget");
        sub->add_option("--steps", c.steps, "Horizon T");
        sub->add_option("--seed", c.seed, "Scenario seed");
        sub->add_option("--out", c.out, "Output CSV path (stdout when omitted)");
        sub->add_flag("--sync", c.sync, "Build certificates inline instead of on the background pool");
    };

    auto* once = app.add_subcommand("verify-once", "Reach and branch on the scenario's first step");
    scenario_flags(once);
    once->add_option("--dump-branches", c.dump_branches, "Write the branch store as JSON");

    auto* online = app.add_subcommand("verify-online", "Step through a scenario with online verification");
    scenario_flags(online);
    online->add_option("--accel", c.accel, "Comma-separated accelerators: bmi,rsr,lb,bmw,inn,ic");
    online->add_option("--dump-branches", c.dump_branches, "Write the final branch store as JSON");

    auto* ablation = app.add_subcommand("bench-ablation", "Time accelerator sets against the baseline");
    scenario_flags(ablation);
    ablation->add_option("--accel", c.accel, "';'-separated accelerator sets (default: the kind's ablation)");
    ablation->add_option("--repeats", c.repeats, "Timing repeats per config")->check(CLI::PositiveNumber);
    ablation->add_option("--steps-out", steps_out, "Per-step CSV path");

    auto* scal = app.add_subcommand("bench-scalability", "Acceleration rate across one scenario variable");
    scenario_flags(scal);
    scal->add_option("--variable", variable, "depth, width, branches, changing_dims or change_rate")->required();
    scal->add_option("--values", values, "Comma-separated values")->required();
    scal->add_option("--repeats", c.repeats, "Timing repeats per config")->check(CLI::PositiveNumber);

    auto* trade = app.add_subcommand("bench-tradeoff", "Time and coverage across an over-approximation knob");
    scenario_flags(trade);
    trade->add_option("--knob", knob, "inn_radius_scale or rsr_offset")->required();
    trade->add_option("--values", values, "Comma-separated ascending values")->required();
    trade->add_option("--repeats", c.repeats, "Timing repeats per config")->check(CLI::PositiveNumber);

    auto* gen = app.add_subcommand("gen-network", "Write a seeded random network");
    gen->add_option("--out", c.out, "Network JSON path")->required();
    gen->add_option("--seed", c.seed, "Weight seed");
    gen->add_option("--inputs", inputs, "Input width");
    gen->add_option("--outputs", outputs, "Output width");
    gen->add_option("--depth", depth, "Weight layers");
    gen->add_option("--width", width, "Hidden width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*once) {
            return verify_once(c);
        }
        if (*online) {
            return verify_online(c);
        }
        if (*ablation) {
            return bench_ablation(c, steps_out);
        }
        if (*scal) {
            return bench_scalability(c, variable, values);
        }
        if (*trade) {
            return bench_tradeoff(c, knob, values);
        }
        return gen_network(c, inputs, outputs, depth, width);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
}
