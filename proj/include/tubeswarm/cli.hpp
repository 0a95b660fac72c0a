#pragma once
/**
 * @file cli.hpp
 * @brief Subcommands of the `tubeswarm` executable: run, compare, lemma2, export-plots.
 *
 * Exit status: 0 on success, 2 for invalid input (bad flags, unreadable or invalid
 * scenario, malformed trace, unwritable output directory), 1 when a run or Monte
 * Carlo estimate fails numerically.
 *
 * Files are written to a temporary name and renamed into place, so an error never
 * leaves a partial output file behind.
 */

#include <tubeswarm/errors.hpp>
#include <tubeswarm/format.hpp>
#include <tubeswarm/harness.hpp>
#include <tubeswarm/noise_analysis.hpp>
#include <tubeswarm/scenario_io.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tubeswarm::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;

/// Parses "A..B" (inclusive) or a single seed.
[[nodiscard]] inline std::vector<std::uint64_t> parseSeedRange(const std::string& text) {
    auto parse = [&](const std::string& s) {
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw InvalidInput("--seeds: cannot parse '" + text + "' (expected A..B)");
        return v;
    };
    const auto dots = text.find("..");
    const std::uint64_t a = parse(dots == std::string::npos ? text : text.substr(0, dots));
    const std::uint64_t b = dots == std::string::npos ? a : parse(text.substr(dots + 2));
    if (b < a) throw InvalidInput("--seeds: range end " + std::to_string(b) + " is below start " + std::to_string(a));
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = a;; ++s) {
        seeds.push_back(s);
        if (s == b) break;
    }
    return seeds;
}

/// Creates @p dir if needed and checks that a file can be created in it.
inline void ensureWritableDir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw InvalidInput("--out: cannot create output directory '" + dir.string() + "'");
    const fs::path probe = dir / ".tubeswarm_write_probe";
    {
        std::ofstream os(probe);
        if (!os) throw InvalidInput("--out: output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

/// Collects files written under temporary names; commit() renames them into place.
class OutputSet {
public:
    ~OutputSet() {
        std::error_code ec;
        for (const auto& [tmp, final_path] : files_) fs::remove(tmp, ec);
    }

    void write(const fs::path& path, const std::function<void(std::ostream&)>& body) {
        const fs::path tmp = path.string() + ".tmp";
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw InvalidInput("--out: cannot write '" + path.string() + "'");
        files_.emplace_back(tmp, path);
        body(os);
        os.flush();
        if (!os) throw InvalidInput("--out: write failed for '" + path.string() + "'");
    }

    void commit() {
        for (const auto& [tmp, final_path] : files_) fs::rename(tmp, final_path);
        files_.clear();
    }

private:
    std::vector<std::pair<fs::path, fs::path>> files_;
};

struct ScenarioFlags {
    std::string scenario{"open6"};
    std::optional<std::string> variant;
    std::optional<double> sigma_p;
    std::optional<double> sigma_v;
    std::optional<std::string> drift_mode;
    std::optional<double> duration;
    std::string out{"."};

    void attach(CLI::App* app, bool with_variant) {
        app->add_option("--scenario", scenario, "built-in scenario (open6, closed10) or scenario file path");
        if (with_variant) app->add_option("--variant", variant, "original | modified | modified-accel");
        app->add_option("--sigma-p", sigma_p, "position drift variance parameter");
        app->add_option("--sigma-v", sigma_v, "velocity noise variance");
        app->add_option("--drift-mode", drift_mode, "A: per-step variance, B: continuous integration");
        app->add_option("--duration", duration, "simulated seconds");
        app->add_option("--out", out, "output directory");
    }

    [[nodiscard]] Scenario load() const {
        Scenario sc = (scenario == "open6" || scenario == "closed10") ? builtinScenario(scenario)
                                                                       : readScenarioFile(scenario);
        if (variant) sc.variant = parseVariant(*variant);
        if (sigma_p) {
            if (!(*sigma_p >= 0.0)) throw InvalidInput("--sigma-p must be non-negative");
            sc.noise.sigma_p = *sigma_p;
        }
        if (sigma_v) {
            if (!(*sigma_v >= 0.0)) throw InvalidInput("--sigma-v must be non-negative");
            sc.noise.sigma_v = *sigma_v;
        }
        if (drift_mode) sc.noise.drift_scaling = parseDriftMode(*drift_mode);
        if (duration) {
            if (!(*duration > 0.0)) throw InvalidInput("--duration must be positive");
            sc.duration = *duration;
        }
        try {
            sc.validate();
        } catch (const ContractViolation& e) {
            throw InvalidInput(std::string("invalid scenario: ") + e.what());
        }
        return sc;
    }
};

[[nodiscard]] inline std::string runStem(const Scenario& sc, std::uint64_t seed) {
    return sc.name + "_" + std::string(toString(sc.variant)) + "_seed" + std::to_string(seed);
}

inline void printMetrics(std::ostream& out, const RunMetrics& m) {
    out << "d_t_all_integral: " << formatDouble(m.d_t_all_integral) << '\n'
        << "collision_count: " << m.collision_count << '\n'
        << "boundary_violation_time: " << formatDouble(m.boundary_violation_time) << '\n'
        << "all_passed_time: " << (m.all_passed_time ? formatDouble(*m.all_passed_time) : std::string("none")) << '\n'
        << "min_pairwise_distance: " << formatDouble(m.min_pairwise_distance) << '\n';
}

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

// ---------------------------------------------------------------------------

struct RunArgs {
    ScenarioFlags flags;
    std::uint64_t seed{1};
    bool trace_terms{false};
};

inline int cmdRun(const RunArgs& a, Streams io) {
    const Scenario sc = a.flags.load();
    const fs::path dir(a.flags.out);
    ensureWritableDir(dir);

    RunOptions opt;
    opt.trace_terms = a.trace_terms;
    const RunResult r = runScenario(sc, a.seed, opt);

    const std::string stem = runStem(sc, a.seed);
    const fs::path trace_path = dir / ("trace_" + stem + ".csv");
    OutputSet files;
    files.write(trace_path, [&](std::ostream& os) { writeTrace(os, r.trace, a.trace_terms); });
    files.write(dir / ("summary_" + stem + ".csv"), [&](std::ostream& os) {
        writeSummaryHeader(os);
        writeSummaryRow(os, {a.seed, sc.variant, r.metrics, r.noise_checksum, r.aborted});
    });
    files.write(dir / ("trace_" + stem + ".scenario"), [&](std::ostream& os) { writeScenario(os, sc); });
    files.commit();

    io.out << "scenario: " << sc.name << "  variant: " << toString(sc.variant) << "  seed: " << a.seed << '\n';
    printMetrics(io.out, r.metrics);
    io.out << "trace: " << trace_path.string() << '\n';
    if (r.aborted) {
        io.err << "error: run aborted: " << r.diagnostic << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
    ScenarioFlags flags;
    std::string seeds{"1..20"};
};

inline int cmdCompare(const CompareArgs& a, Streams io) {
    const std::vector<std::uint64_t> seeds = parseSeedRange(a.seeds);
    if (seeds.size() < 2)
        throw InvalidInput("--seeds: a comparison needs at least 2 seeds, got " + std::to_string(seeds.size()));
    const Scenario sc = a.flags.load();
    const fs::path dir(a.flags.out);
    ensureWritableDir(dir);

    const ComparisonTable table = compareControllers(sc, seeds);

    const fs::path path =
        dir / ("comparison_" + sc.name + "_seeds" + std::to_string(seeds.front()) + "-" +
               std::to_string(seeds.back()) + ".csv");
    OutputSet files;
    files.write(path, [&](std::ostream& os) {
        writeSummaryHeader(os);
        for (const SummaryRow& row : table.rows) writeSummaryRow(os, row);
    });
    files.commit();

    const int n = static_cast<int>(seeds.size());
    if (table.allTied()) {
        io.out << "win-rate: tie (all " << n << " seeds tied)\n";
    } else {
        io.out << "win-rate: " << formatDouble(table.win_rate) << " (" << table.wins << " wins, " << table.ties
               << " ties, " << table.losses << " losses over " << n << " seeds)\n";
    }
    io.out << "mean d_t_all_integral: original " << formatDouble(table.mean_original) << ", modified "
           << formatDouble(table.mean_modified) << '\n'
           << "summary: " << path.string() << '\n';
    const bool aborted = std::any_of(table.rows.begin(), table.rows.end(), [](const SummaryRow& r) { return r.aborted; });
    if (aborted) {
        io.err << "error: at least one run aborted\n";
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct Lemma2Args {
    std::vector<int> N{1, 2, 6};
    std::vector<double> k5{1.0};
    std::vector<double> k_v{1.0};
    double sigma_v{1.0};
    int trials{100};
    double mc_duration{20.0};
    double mc_burn_in{5.0};
    std::optional<double> mc_dt;
    std::uint64_t seed{1};
    std::string out{"."};
};

struct Lemma2Row {
    int N{1};
    double k5{1.0};
    double k_v{1.0};
    double sigma_closed{0.0};
    double sigma_spectral{0.0};
    std::optional<double> sigma_mc;
    double ratio{1.0};
};

inline int cmdLemma2(const Lemma2Args& a, Streams io) {
    if (a.N.empty() || a.k5.empty() || a.k_v.empty()) throw InvalidInput("--N/--k5/--kv: parameter grid is empty");
    for (int n : a.N)
        if (n < 1) throw InvalidInput("--N: robot counts must be >= 1");
    for (double v : a.k5)
        if (!(v > 0.0)) throw InvalidInput("--k5: values must be positive");
    for (double v : a.k_v)
        if (!(v > 0.0)) throw InvalidInput("--kv: values must be positive");
    if (!(a.sigma_v > 0.0)) throw InvalidInput("--sigma-v must be positive");
    if (a.trials < 0) throw InvalidInput("--trials must be >= 0");
    const fs::path dir(a.out);
    ensureWritableDir(dir);

    std::vector<Lemma2Row> rows;
    double worst_spectral = 0.0;
    double worst_mc = 0.0;
    for (int n : a.N)
        for (double k5 : a.k5)
            for (double kv : a.k_v) {
                Lemma2Row row;
                row.N = n;
                row.k5 = k5;
                row.k_v = kv;
                const NoiseVarianceResult closed = closedFormVariances(n, kv, k5, a.sigma_v);
                row.sigma_closed = closed.sigma_double_prime;
                row.ratio = closed.ratio;
                row.sigma_spectral = spectralVariances(n, kv, k5, a.sigma_v).sigma_double_prime;
                worst_spectral = std::max(worst_spectral, std::abs(row.sigma_spectral - row.sigma_closed) / row.sigma_closed);
                if (a.trials > 0) {
                    MonteCarloConfig mc;
                    mc.N = n;
                    mc.k_v = kv;
                    mc.k5 = k5;
                    mc.sigma_v = a.sigma_v;
                    mc.law = TrackingLaw::Aligned;
                    mc.dt = a.mc_dt.value_or(1e-3 / kv);
                    mc.duration = a.mc_duration;
                    mc.burn_in = a.mc_burn_in;
                    mc.trials = a.trials;
                    mc.seed = a.seed;
                    try {
                        row.sigma_mc = monteCarloVariance(mc).variance;
                    } catch (const DiscretizationUnstable& e) {
                        io.err << "error: Monte Carlo unstable at N=" << n << " k5=" << formatDouble(k5)
                               << " k_v=" << formatDouble(kv) << ": " << e.what() << '\n';
                        return kExitFailure;
                    } catch (const ContractViolation& e) {
                        throw InvalidInput("--mc-dt: " + std::string(e.what()));
                    }
                    worst_mc = std::max(worst_mc, std::abs(*row.sigma_mc - row.sigma_closed) / row.sigma_closed);
                }
                rows.push_back(row);
            }

    const fs::path path = dir / "lemma2.csv";
    OutputSet files;
    files.write(path, [&](std::ostream& os) {
        os << "N,k5,k_v,sigma_closed,sigma_spectral,sigma_mc,ratio\n";
        for (const Lemma2Row& r : rows)
            os << r.N << ',' << formatDouble(r.k5) << ',' << formatDouble(r.k_v) << ','
               << formatDouble(r.sigma_closed) << ',' << formatDouble(r.sigma_spectral) << ','
               << (r.sigma_mc ? formatDouble(*r.sigma_mc) : std::string{}) << ',' << formatDouble(r.ratio) << '\n';
    });
    files.commit();

    io.out << "cells: " << rows.size() << '\n'
           << "max relative disagreement spectral vs closed form: " << formatDouble(worst_spectral) << '\n';
    if (a.trials > 0)
        io.out << "max relative disagreement Monte Carlo vs closed form: " << formatDouble(worst_mc) << '\n';
    io.out << "table: " << path.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
    std::string trace;
    std::optional<std::string> scenario;
    std::string out{"."};
};

/// Scenario file written next to a trace by `run`.
[[nodiscard]] inline fs::path sidecarScenario(const fs::path& trace) {
    fs::path p = trace;
    p.replace_extension(".scenario");
    return p;
}

inline int cmdExportPlots(const ExportArgs& a, Streams io) {
    std::ifstream in(a.trace);
    if (!in) throw InvalidInput("--trace: cannot read '" + a.trace + "'");
    const std::vector<TraceRecord> trace = readTrace(in);

    Scenario sc;
    if (a.scenario) {
        ScenarioFlags f;
        f.scenario = *a.scenario;
        sc = f.load();
    } else {
        const fs::path side = sidecarScenario(a.trace);
        if (!fs::exists(side))
            throw InvalidInput("--scenario: not given and no scenario file next to the trace ('" + side.string() + "')");
        sc = readScenarioFile(side.string());
    }
    const fs::path dir(a.out);
    ensureWritableDir(dir);

    std::string stem = fs::path(a.trace).stem().string();
    if (stem.rfind("trace_", 0) == 0) stem.erase(0, 6);

    const std::vector<double> dt_all = dtAllFromTrace(trace, sc.gains.r_s);
    std::vector<double> times;
    for (const TraceRecord& r : trace)
        if (times.empty() || r.t != times.back()) times.push_back(r.t);

    std::vector<TraceRecord> by_robot = trace;
    std::stable_sort(by_robot.begin(), by_robot.end(),
                     [](const TraceRecord& x, const TraceRecord& y) { return x.robot_id < y.robot_id; });

    OutputSet files;
    const fs::path boundary = dir / (stem + "_boundary.csv");
    const fs::path trajectories = dir / (stem + "_trajectories.csv");
    const fs::path series = dir / (stem + "_dt_all.csv");
    const fs::path drift = dir / (stem + "_drift.csv");
    files.write(boundary, [&](std::ostream& os) { writeBoundaryCsv(os, *sc.tube); });
    files.write(trajectories, [&](std::ostream& os) {
        os << "robot_id,t,x,y\n";
        for (const TraceRecord& r : by_robot)
            os << r.robot_id << ',' << formatDouble(r.t) << ',' << formatDouble(r.p.x) << ',' << formatDouble(r.p.y)
               << '\n';
    });
    files.write(series, [&](std::ostream& os) {
        os << "t,d_t_all\n";
        for (std::size_t k = 0; k < dt_all.size(); ++k)
            os << formatDouble(times[k]) << ',' << formatDouble(dt_all[k]) << '\n';
    });
    files.write(drift, [&](std::ostream& os) {
        os << "robot_id,t,drift\n";
        for (const TraceRecord& r : by_robot)
            os << r.robot_id << ',' << formatDouble(r.t) << ',' << formatDouble((r.p_hat - r.p).norm()) << '\n';
    });
    files.commit();

    io.out << "ticks: " << dt_all.size() << '\n';
    for (const fs::path& p : {boundary, trajectories, series, drift}) io.out << "wrote " << p.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

/// Parses and dispatches one command line. Never throws.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Swarm navigation through curve virtual tubes under sensing noise"};
    app.require_subcommand(1);

    RunArgs run;
    CLI::App* run_cmd = app.add_subcommand("run", "simulate one scenario and write its trace and summary");
    run.flags.attach(run_cmd, true);
    run_cmd->add_option("--seed", run.seed, "noise seed");
    run_cmd->add_flag("--trace-terms", run.trace_terms, "add u1..u5 columns to the trace");

    CompareArgs cmp;
    CLI::App* cmp_cmd = app.add_subcommand("compare", "paired original vs modified runs over a seed range");
    cmp.flags.attach(cmp_cmd, false);
    cmp_cmd->add_option("--seeds", cmp.seeds, "inclusive seed range A..B");

    Lemma2Args lem;
    CLI::App* lem_cmd = app.add_subcommand("lemma2", "velocity-noise variance table: closed form, spectral, Monte Carlo");
    lem_cmd->add_option("--N", lem.N, "robot counts")->expected(1, -1);
    lem_cmd->add_option("--k5", lem.k5, "alignment gains")->expected(1, -1);
    lem_cmd->add_option("--kv", lem.k_v, "tracking gains")->expected(1, -1);
    lem_cmd->add_option("--sigma-v", lem.sigma_v, "velocity noise variance");
    lem_cmd->add_option("--trials", lem.trials, "Monte Carlo trials per cell (0 skips Monte Carlo)");
    lem_cmd->add_option("--mc-duration", lem.mc_duration, "simulated seconds per trial");
    lem_cmd->add_option("--mc-burn-in", lem.mc_burn_in, "discarded seconds per trial");
    lem_cmd->add_option("--mc-dt", lem.mc_dt, "Monte Carlo step (default 0.001 / k_v)");
    lem_cmd->add_option("--seed", lem.seed, "Monte Carlo seed");
    lem_cmd->add_option("--out", lem.out, "output directory");

    ExportArgs exp;
    CLI::App* exp_cmd = app.add_subcommand("export-plots", "turn a trace into plot-ready CSV files");
    exp_cmd->add_option("--trace", exp.trace, "trace CSV written by run")->required();
    exp_cmd->add_option("--scenario", exp.scenario, "scenario of the trace (default: file next to the trace)");
    exp_cmd->add_option("--out", exp.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInvalid;
    }

    const Streams io{out, err};
    try {
        if (*run_cmd) return cmdRun(run, io);
        if (*cmp_cmd) return cmdCompare(cmp, io);
        if (*lem_cmd) return cmdLemma2(lem, io);
        if (*exp_cmd) return cmdExportPlots(exp, io);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ContractViolation& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitInvalid;
}

}  // namespace tubeswarm::cli
