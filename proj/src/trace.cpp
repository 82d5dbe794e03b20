#include "flock/trace.hpp"

#include "flock/error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace flocking {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

TraceWriter::TraceWriter(std::ostream& out) : out_(out) { out_ << kTraceHeader << '\n'; }

void TraceWriter::write(const SwarmState& state)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto& vc = state.vc;
    const Vec3 vp = vc.pose.translation;
    const Vec3 vv = vc.twist.linear;
    auto add = [&](double v) {
        line_ += format_double(v);
        line_ += ',';
    };
    for (const auto& a : state.agents) {
        line_.clear();
        add(state.t);
        line_ += std::to_string(a.agent_id);
        line_ += ',';
        add(a.position.x);
        add(a.position.y);
        add(a.position.z);
        add(a.yaw);
        add(a.velocity.x);
        add(a.velocity.y);
        add(a.velocity.z);
        const bool has_ref = !a.detached() && a.reference;
        const Vec3 ref = has_ref ? a.reference->translation : Vec3{nan, nan, nan};
        add(ref.x);
        add(ref.y);
        add(ref.z);
        add(vp.x);
        add(vp.y);
        add(vp.z);
        add(vc.pose.rotation.yaw());
        add(vv.x);
        add(vv.y);
        add(vv.z);
        line_ += to_string(state.phase);
        line_ += ',';
        line_ += format_double(vc.twist.angular.z);
        line_ += '\n';
        out_ << line_;
    }
}

namespace {

double parse_number(std::string_view s, std::size_t line)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error(ErrorKind::ParseError, "trace line " + std::to_string(line) + ": bad number '" +
                                               std::string(s) + "'");
    return v;
}

Phase parse_phase(std::string_view s, std::size_t line)
{
    if (s == "setup")
        return Phase::Setup;
    if (s == "motion")
        return Phase::Motion;
    if (s == "idle")
        return Phase::Idle;
    throw Error(ErrorKind::ParseError, "trace line " + std::to_string(line) + ": bad phase '" + std::string(s) + "'");
}

} // namespace

std::vector<Observation> read_trace(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw Error(ErrorKind::ParseError, "trace header does not match the expected columns");

    std::vector<Observation> out;
    std::vector<std::string_view> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        cells.clear();
        std::string_view rest(line);
        while (true) {
            auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != 21)
            throw Error(ErrorKind::ParseError, "trace line " + std::to_string(lineno) + ": expected 21 columns");

        auto num = [&](std::size_t i) { return parse_number(cells[i], lineno); };
        const double t = num(0);
        if (out.empty() || out.back().t != t) {
            if (!out.empty() && t < out.back().t)
                throw Error(ErrorKind::ParseError, "trace line " + std::to_string(lineno) + ": time goes backwards");
            Observation obs;
            obs.t = t;
            obs.vc_position = {num(12), num(13), num(14)};
            obs.vc_yaw = num(15);
            obs.vc_velocity = {num(16), num(17), num(18)};
            obs.phase = parse_phase(cells[19], lineno);
            obs.vc_yaw_rate = num(20);
            out.push_back(std::move(obs));
        }
        AgentObservation a;
        int id = 0;
        auto res = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), id);
        if (res.ec != std::errc() || res.ptr != cells[1].data() + cells[1].size())
            throw Error(ErrorKind::ParseError, "trace line " + std::to_string(lineno) + ": bad agent_id");
        a.agent_id = id;
        a.position = {num(2), num(3), num(4)};
        a.yaw = num(5);
        a.velocity = {num(6), num(7), num(8)};
        a.reference = {num(9), num(10), num(11)};
        a.detached = std::isnan(a.reference.x);
        out.back().agents.push_back(a);
    }
    return out;
}

} // namespace flocking
