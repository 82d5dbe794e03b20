#include "flock/runner.hpp"

#include "flock/error.hpp"
#include "flock/trace.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <thread>

namespace flocking {

using nlohmann::json;

bool RunResult::any_rejected() const
{
    for (const auto& c : commands)
        if (!c.accepted)
            return true;
    return false;
}

namespace {

// Uniform in [-1, 1) from the raw 64-bit stream, identical on every platform
// (std::uniform_real_distribution is implementation-defined).
double symmetric_unit(std::mt19937_64& gen)
{
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

std::string fixed3(double t)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", t);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    return out;
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

json summary_json(const Scenario& scenario, const RunResult& r, double dt, std::uint64_t seed, AgentModel::Mode mode)
{
    json j;
    j["scenario"] = scenario.name;
    j["seed"] = seed;
    j["dt"] = dt;
    j["model"] = mode == AgentModel::Mode::Ideal ? "ideal" : "lagged";
    j["t_motion_start"] = r.t_motion_start;
    j["t_end"] = r.t_end;
    j["window"] = {r.report.window.start, r.report.window.end};
    j["thresholds"] = {{"d_max", r.report.thresholds.d_max},
                       {"d_min", r.report.thresholds.d_min},
                       {"delta", r.report.thresholds.delta}};
    j["sample_count"] = r.report.sample_count;
    j["violations"] = {{"cohesion", r.report.violations.cohesion},
                       {"separation", r.report.violations.separation},
                       {"alignment", r.report.violations.alignment}};
    j["corrected_cohesion"] = json::array();
    for (const auto& c : corrected_cohesion(r.report))
        j["corrected_cohesion"].push_back({{"agent_id", c.agent_id}, {"mean", c.mean}, {"std", c.std}});
    j["agents"] = json::array();
    for (const auto& a : r.report.agents)
        j["agents"].push_back({{"agent_id", a.agent_id},
                               {"cohesion", stat_json(a.cohesion)},
                               {"reference_error", stat_json(a.reference_error)},
                               {"alignment", stat_json(a.alignment)}});
    j["commands"] = json::array();
    for (const auto& c : r.commands)
        j["commands"].push_back({{"t", c.t},
                                 {"command", c.command},
                                 {"status", c.accepted ? "accepted" : "rejected"},
                                 {"reason", c.reason}});
    return j;
}

} // namespace

std::vector<Vec3> initial_positions(const Scenario& scenario, AgentModel::Mode mode, std::uint64_t seed)
{
    std::vector<Vec3> out = scenario.agents.initial_positions;
    if (out.empty()) {
        const Pose vc = plan(scenario.trajectory).sample(0.0).pose;
        for (const auto& slot : scenario.formation.slots()) {
            Vec3 p = transform_point(vc, slot.offset.translation);
            p.z = 0.0;
            out.push_back(p);
        }
    }
    if (mode == AgentModel::Mode::Lagged && scenario.agents.jitter > 0.0) {
        std::mt19937_64 gen(seed);
        for (auto& p : out) {
            p.x += scenario.agents.jitter * symmetric_unit(gen);
            p.y += scenario.agents.jitter * symmetric_unit(gen);
        }
    }
    return out;
}

Thresholds scenario_thresholds(const Scenario& scenario)
{
    Thresholds th;
    th.d_max = scenario.metrics.d_max.value_or(scenario.formation.d_max());
    th.d_min = scenario.metrics.d_min.value_or(scenario.formation.d_min());
    th.delta = scenario.metrics.delta;
    return th;
}

MetricsReport metrics_from_observations(const std::vector<Observation>& observations, const Thresholds& thresholds,
                                        const std::optional<Window>& window)
{
    std::vector<MetricsSample> samples;
    for (const auto& obs : observations)
        if (obs.phase == Phase::Motion)
            samples.push_back(sample_metrics(obs));
    if (samples.empty())
        throw Error(ErrorKind::EmptyWindow, "the run has no motion-phase samples");
    const Window w = window.value_or(default_window(samples.front().t, samples.back().t));
    return summarize(samples, w, thresholds);
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report)
{
    out << "agent_id,cohesion_mean,cohesion_std,ref_err_mean,ref_err_std,align_mean,align_std\n";
    for (const auto& a : report.agents)
        out << a.agent_id << ',' << format_double(a.cohesion.mean) << ',' << format_double(a.cohesion.std) << ','
            << format_double(a.reference_error.mean) << ',' << format_double(a.reference_error.std) << ','
            << format_double(a.alignment.mean) << ',' << format_double(a.alignment.std) << '\n';
    out << '\n';
    out << "agent_i,agent_j,sep_mean,sep_std\n";
    for (const auto& p : report.pairs)
        out << p.agent_i << ',' << p.agent_j << ',' << format_double(p.separation.mean) << ','
            << format_double(p.separation.std) << '\n';
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options)
{
    const double dt = options.dt.value_or(scenario.engine.dt);
    const std::uint64_t seed = options.seed.value_or(scenario.engine.seed);
    EngineConfig config;
    config.dt = dt;
    config.model = scenario.agents.model;
    if (options.model)
        config.model.mode = *options.model;

    TrajectorySpec spec = scenario.trajectory;
    if (options.v_max)
        spec.v_max = *options.v_max;
    const Pose vc_pose = plan(spec).sample(0.0).pose;
    const std::vector<Vec3> positions = initial_positions(scenario, config.model.mode, seed);

    std::unique_ptr<std::ofstream> trace_file;
    std::unique_ptr<std::ofstream> events_file;
    std::unique_ptr<TraceWriter> trace;
    if (options.out_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*options.out_dir, ec);
        if (ec)
            throw Error(ErrorKind::IoError, "cannot create '" + options.out_dir->string() + "': " + ec.message());
        trace_file = std::make_unique<std::ofstream>(open_out(*options.out_dir / "trace.csv"));
        events_file = std::make_unique<std::ofstream>(open_out(*options.out_dir / "events.log"));
        trace = std::make_unique<TraceWriter>(*trace_file);
    }

    RunResult result;
    result.scenario = scenario.name;

    Engine engine(config, scenario.formation, positions, scenario.agents.initial_yaws, vc_pose);
    if (options.on_engine)
        options.on_engine(engine);
    struct FinishGuard {
        const RunOptions& options;
        Engine& engine;
        ~FinishGuard()
        {
            if (options.on_finish)
                options.on_finish(engine);
        }
    } finish_guard{options, engine};

    const auto wall_start = std::chrono::steady_clock::now();
    auto flush_events = [&] {
        for (auto& e : engine.take_events()) {
            if (events_file)
                *events_file << fixed3(e.t) << ' ' << e.text << '\n';
            result.events.push_back(std::move(e));
        }
    };
    auto record = [&](const SwarmState& s) {
        if (trace)
            trace->write(s);
        result.observations.push_back(observe(s));
        flush_events();
        if (options.on_tick)
            options.on_tick(s);
        if (options.realtime)
            std::this_thread::sleep_until(wall_start + std::chrono::duration<double>(s.t));
    };
    auto issue = [&](const Command& command) {
        CommandOutcome o;
        o.t = engine.state().t;
        o.command = describe(command);
        try {
            engine.apply(command);
            o.accepted = true;
        } catch (const Error& e) {
            o.reason = std::string(to_string(e.kind()));
            o.message = e.what();
        }
        if (events_file)
            *events_file << fixed3(o.t) << " command " << o.command << ": "
                         << (o.accepted ? std::string("accepted") : "rejected (" + o.reason + ": " + o.message + ")")
                         << '\n';
        result.commands.push_back(o);
        flush_events();
        return o.accepted;
    };

    record(engine.state());
    const Assignment assignment = assign_slots(positions, scenario.formation, vc_pose);
    result.setup_ticks = engine.run_setup(assignment, scenario.agents.setup_speed.value_or(spec.v_max), record);
    flush_events();

    if (!issue(cmd::StartTrajectory{spec}))
        throw Error(ErrorKind::ConstraintViolation, "trajectory rejected: " + result.commands.back().message);
    const double t0 = engine.state().t;
    const double guard = t0 + 24.0 * 3600.0;

    std::size_t next_event = 0;
    bool quiet_before = false;
    double quiet_since = 0.0;
    while (true) {
        const double t = engine.state().t;
        while (next_event < scenario.events.size() && t >= t0 + scenario.events[next_event].t - 1e-9)
            issue(scenario.events[next_event++].command);

        if (scenario.engine.duration) {
            if (t >= t0 + *scenario.engine.duration - 1e-9)
                break;
        } else {
            const bool quiet = next_event == scenario.events.size() && !engine.trajectory_active() &&
                               !engine.state().transition && !engine.paused();
            if (quiet && !quiet_before)
                quiet_since = t;
            quiet_before = quiet;
            if (quiet && t >= quiet_since + scenario.engine.tail - 1e-9)
                break;
        }
        if (t > guard)
            break;
        engine.tick();
        ++result.ticks;
        record(engine.state());
    }

    bool seen_motion = false;
    for (const auto& obs : result.observations) {
        if (obs.phase != Phase::Motion)
            continue;
        if (!seen_motion)
            result.t_motion_start = obs.t;
        seen_motion = true;
        result.t_end = obs.t;
    }

    if (trace_file) {
        trace_file->flush();
        events_file->flush();
        if (!*trace_file || !*events_file)
            throw Error(ErrorKind::IoError, "failed writing run output");
    }

    result.report = metrics_from_observations(result.observations, scenario_thresholds(scenario),
                                              scenario.metrics.window);

    if (options.out_dir) {
        auto metrics_file = open_out(*options.out_dir / "metrics.csv");
        write_metrics_csv(metrics_file, result.report);
        auto summary_file = open_out(*options.out_dir / "summary.json");
        summary_file << summary_json(scenario, result, dt, seed, config.model.mode).dump(2) << '\n';
        if (!metrics_file || !summary_file)
            throw Error(ErrorKind::IoError, "failed writing run output");
    }
    return result;
}

} // namespace flocking
