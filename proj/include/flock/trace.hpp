#pragma once

#include "flock/engine.hpp"
#include "flock/metrics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace flocking {

// Column order of trace.csv. The trailing vc_wz (centroid yaw rate, rad/s)
// lets alignment be recomputed from the file alone.
inline constexpr const char* kTraceHeader =
    "t,agent_id,px,py,pz,yaw,vx,vy,vz,ref_px,ref_py,ref_pz,vc_px,vc_py,vc_pz,vc_yaw,vc_vx,vc_vy,vc_vz,phase,vc_wz";

// Shortest decimal form that parses back to the same double; "nan" for NaN.
std::string format_double(double v);

class TraceWriter {
public:
    explicit TraceWriter(std::ostream& out);
    // One row per agent, ordered by agent id. Rows of detached agents carry
    // nan reference columns.
    void write(const SwarmState& state);

private:
    std::ostream& out_;
    std::string line_;
};

// Parses trace.csv back into one Observation per distinct t, in file order.
// Throws ParseError on a malformed file.
std::vector<Observation> read_trace(std::istream& in);

} // namespace flocking
