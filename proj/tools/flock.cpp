// flock: run swarm scenarios, recompute metrics, generate formations.

#include "flock/commands_json.hpp"
#include "flock/error.hpp"
#include "flock/runner.hpp"
#include "flock/scenario.hpp"
#include "flock/telemetry.hpp"
#include "flock/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

using namespace flocking;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitConstraint = 3;
constexpr int kExitIo = 4;

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::MalformedMessage:
    case ErrorKind::UnknownFormation:
        return kExitParse;
    case ErrorKind::IoError:
    case ErrorKind::PortInUse:
        return kExitIo;
    default:
        return kExitConstraint;
    }
}

struct RunArgs {
    std::string scenario;
    std::string out = "out";
    bool realtime = false;
    int serve = -1;
    std::string host = "127.0.0.1";
    bool strict = false;
    int repeat = 1;
    std::optional<std::uint64_t> seed_base;
    std::string model;
    std::optional<double> v_max;
    std::optional<double> dt;
};

void print_summary(const RunResult& r, const std::filesystem::path& dir)
{
    std::printf("%s: motion %.2f-%.2f s, %zu samples in window [%.2f, %.2f], violations c/s/a %zu/%zu/%zu -> %s\n",
                r.scenario.c_str(), r.t_motion_start, r.t_end, r.report.sample_count, r.report.window.start,
                r.report.window.end, r.report.violations.cohesion, r.report.violations.separation,
                r.report.violations.alignment, dir.string().c_str());
    for (const auto& c : r.commands)
        if (!c.accepted)
            std::printf("  rejected at %.3f s: %s (%s)\n", c.t, c.command.c_str(), c.reason.c_str());
}

int cmd_run(const RunArgs& a)
{
    const Scenario scenario = resolve_scenario(a.scenario);
    RunOptions opts;
    opts.realtime = a.realtime || a.serve >= 0;
    opts.v_max = a.v_max;
    opts.dt = a.dt;
    if (a.model == "ideal")
        opts.model = AgentModel::Mode::Ideal;
    else if (a.model == "lagged")
        opts.model = AgentModel::Mode::Lagged;

    std::unique_ptr<TelemetryServer> server;
    if (a.serve >= 0) {
        TelemetryOptions topts;
        topts.host = a.host;
        topts.port = static_cast<unsigned short>(a.serve);
        server = std::make_unique<TelemetryServer>(topts, scenario.document, scenario.formations);
        std::fprintf(stderr, "serving ws://%s:%u/v1/stream\n", a.host.c_str(), server->port());
        opts.on_engine = [&](Engine& e) { server->attach(e); };
        opts.on_finish = [&](Engine&) { server->detach(); };
    }

    const std::uint64_t base = a.seed_base.value_or(scenario.engine.seed);
    bool violated = false;
    for (int i = 0; i < a.repeat; ++i) {
        std::filesystem::path dir = a.out;
        if (a.repeat > 1) {
            char name[32];
            std::snprintf(name, sizeof name, "run_%03d", i);
            dir /= name;
        }
        opts.out_dir = dir;
        opts.seed = base + static_cast<std::uint64_t>(i);
        const RunResult r = run_scenario(scenario, opts);
        print_summary(r, dir);
        const auto& v = r.report.violations;
        violated = violated || r.any_rejected() || v.cohesion + v.separation + v.alignment > 0;
    }
    return a.strict && violated ? kExitConstraint : kExitOk;
}

struct MetricsArgs {
    std::string trace;
    std::optional<double> dmax;
    std::optional<double> dmin;
    std::optional<double> delta;
    std::optional<double> window_start;
    std::optional<double> window_end;
    std::string out;
};

int cmd_metrics(const MetricsArgs& a)
{
    std::ifstream in(a.trace, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open trace '" + a.trace + "'");

    // Defaults come from the run's summary.json when it sits next to the trace.
    Thresholds th{std::numeric_limits<double>::infinity(), 0.0, 0.15};
    std::optional<Window> window;
    const auto summary_path = std::filesystem::path(a.trace).parent_path() / "summary.json";
    if (std::ifstream s(summary_path); s) {
        const json j = json::parse(s, nullptr, false);
        if (!j.is_discarded() && j.contains("thresholds")) {
            th.d_max = j["thresholds"].value("d_max", th.d_max);
            th.d_min = j["thresholds"].value("d_min", th.d_min);
            th.delta = j["thresholds"].value("delta", th.delta);
        }
        if (!j.is_discarded() && j.contains("window") && j["window"].is_array() && j["window"].size() == 2)
            window = Window{j["window"][0].get<double>(), j["window"][1].get<double>()};
    }
    if (a.dmax)
        th.d_max = *a.dmax;
    if (a.dmin)
        th.d_min = *a.dmin;
    if (a.delta)
        th.delta = *a.delta;
    if (a.window_start || a.window_end) {
        Window w = window.value_or(Window{-std::numeric_limits<double>::infinity(),
                                          std::numeric_limits<double>::infinity()});
        if (a.window_start)
            w.start = *a.window_start;
        if (a.window_end)
            w.end = *a.window_end;
        window = w;
    }

    const auto observations = read_trace(in);
    const MetricsReport report = metrics_from_observations(observations, th, window);
    if (a.out.empty()) {
        write_metrics_csv(std::cout, report);
    } else {
        std::ofstream out(a.out, std::ios::binary);
        if (!out)
            throw Error(ErrorKind::IoError, "cannot write '" + a.out + "'");
        write_metrics_csv(out, report);
        if (!out)
            throw Error(ErrorKind::IoError, "failed writing '" + a.out + "'");
    }
    std::fprintf(stderr, "window [%.3f, %.3f], %zu samples, violations cohesion %zu separation %zu alignment %zu\n",
                 report.window.start, report.window.end, report.sample_count, report.violations.cohesion,
                 report.violations.separation, report.violations.alignment);
    return kExitOk;
}

struct GenArgs {
    std::string shape;
    std::string name;
    int n = 0;
    int rows = 0;
    int cols = 0;
    std::optional<double> radius;
    std::optional<double> side;
    double spacing = 1.0;
    double dmin = 0.5;
    std::vector<std::string> slots;
    std::string out;
};

Vec3 parse_triplet(const std::string& s)
{
    Vec3 v;
    char c1 = 0;
    char c2 = 0;
    std::istringstream is(s);
    if (!(is >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',' || !is.eof())
        throw Error(ErrorKind::ParseError, "slot '" + s + "' must be x,y,z");
    return v;
}

int cmd_gen(const GenArgs& a)
{
    FormationSpec spec = [&]() -> FormationSpec {
        if (a.shape == "regular") {
            if (a.radius)
                return regular_formation(a.n, *a.radius, a.dmin);
            if (a.side && a.n >= 2)
                return regular_formation(a.n, *a.side / (2.0 * std::sin(kPi / a.n)), a.dmin);
            throw Error(ErrorKind::ParseError, "regular formations need --radius (or --side with n >= 2)");
        }
        if (a.shape == "line")
            return line_formation(a.n, a.spacing, a.dmin);
        if (a.shape == "square") {
            if (!a.side)
                throw Error(ErrorKind::ParseError, "square formations need --side");
            return square_formation(*a.side, a.dmin);
        }
        if (a.shape == "grid")
            return grid_formation(a.rows, a.cols, a.spacing, a.dmin);
        std::vector<FormationSlot> slots;
        for (std::size_t i = 0; i < a.slots.size(); ++i)
            slots.push_back({static_cast<int>(i), Pose::from_translation(parse_triplet(a.slots[i]))});
        return FormationSpec("custom", std::move(slots), a.dmin);
    }();
    if (!a.name.empty())
        spec = spec.renamed(a.name);

    const std::string doc = formation_to_document(spec);
    if (a.out.empty()) {
        std::cout << doc << '\n';
    } else {
        std::ofstream out(a.out, std::ios::binary);
        if (!(out << doc << '\n'))
            throw Error(ErrorKind::IoError, "cannot write '" + a.out + "'");
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Virtual-centroid swarm simulator"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario file or preset and write trace, metrics and events");
    run_cmd->add_option("--scenario", run.scenario, "Scenario file or preset name")->required();
    run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
    run_cmd->add_flag("--realtime", run.realtime, "Pace ticks to the wall clock");
    run_cmd->add_option("--serve", run.serve, "Serve telemetry on this port (implies --realtime; 0 picks one)");
    run_cmd->add_option("--host", run.host, "Telemetry bind address")->capture_default_str();
    run_cmd->add_flag("--strict", run.strict, "Exit 3 on any rejected command or metric violation");
    run_cmd->add_option("--repeat", run.repeat, "Number of runs, written to run_NNN subdirectories")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed-base", run.seed_base, "Seed of the first run; later runs count up");
    run_cmd->add_option("--model", run.model, "Override the agent model")->check(CLI::IsMember({"ideal", "lagged"}));
    run_cmd->add_option("--v-max", run.v_max, "Override the trajectory speed limit (m/s)");
    run_cmd->add_option("--dt", run.dt, "Override the tick length (s)");

    MetricsArgs met;
    auto* met_cmd = app.add_subcommand("metrics", "Recompute metrics from a trace.csv");
    met_cmd->add_option("--trace", met.trace, "Trace file")->required();
    met_cmd->add_option("--dmax", met.dmax, "Cohesion threshold (m)");
    met_cmd->add_option("--dmin", met.dmin, "Separation threshold (m)");
    met_cmd->add_option("--delta", met.delta, "Alignment threshold (m/s)");
    met_cmd->add_option("--window-start", met.window_start, "Window start (s)");
    met_cmd->add_option("--window-end", met.window_end, "Window end (s)");
    met_cmd->add_option("--out", met.out, "Write metrics CSV here instead of stdout");

    GenArgs gen;
    auto* form_cmd = app.add_subcommand("formation", "Formation tools");
    form_cmd->require_subcommand(1);
    auto* gen_cmd = form_cmd->add_subcommand("gen", "Generate a formation document");
    gen_cmd->add_option("--shape", gen.shape, "Formation shape")
        ->required()
        ->check(CLI::IsMember({"regular", "line", "square", "grid", "custom"}));
    gen_cmd->add_option("--n", gen.n, "Slot count (regular, line)");
    gen_cmd->add_option("--radius", gen.radius, "Circle radius (regular)");
    gen_cmd->add_option("--side", gen.side, "Side length (square, regular)");
    gen_cmd->add_option("--spacing", gen.spacing, "Slot spacing (line, grid)")->capture_default_str();
    gen_cmd->add_option("--rows", gen.rows, "Rows (grid)");
    gen_cmd->add_option("--cols", gen.cols, "Columns (grid)");
    gen_cmd->add_option("--dmin", gen.dmin, "Minimum slot separation (m)")->capture_default_str();
    gen_cmd->add_option("--slot", gen.slots, "Slot as x,y,z (custom; repeat)");
    gen_cmd->add_option("--name", gen.name, "Formation name");
    gen_cmd->add_option("--out", gen.out, "Write here instead of stdout");

    std::string show_name;
    auto* sc_cmd = app.add_subcommand("scenarios", "Built-in scenarios");
    sc_cmd->require_subcommand(1);
    auto* list_cmd = sc_cmd->add_subcommand("list", "List presets");
    auto* show_cmd = sc_cmd->add_subcommand("show", "Print a preset as a scenario file");
    show_cmd->add_option("name", show_name, "Preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitParse;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*met_cmd)
            return cmd_metrics(met);
        if (*gen_cmd)
            return cmd_gen(gen);
        if (*list_cmd) {
            for (const auto& name : preset_names()) {
                const Scenario s = load_preset(name);
                std::printf("%-14s %s\n", name.c_str(), s.description.c_str());
            }
            return kExitOk;
        }
        if (*show_cmd) {
            auto doc = preset_document(show_name);
            if (!doc)
                throw Error(ErrorKind::ParseError, "no preset named '" + show_name + "'");
            std::cout << *doc << '\n';
            return kExitOk;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", std::string(to_string(e.kind())).c_str(), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConstraint;
    }
    return kExitOk;
}
