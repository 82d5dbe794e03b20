#pragma once

#include "flock/commands_json.hpp"
#include "flock/engine.hpp"

#include <json.hpp>

#include <cstddef>
#include <memory>
#include <string>

namespace flocking {

struct TelemetryOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 0; // 0 picks a free port
    double rate_hz = 20.0;   // snapshot rate in simulated time
    std::size_t queue_depth = 4;
};

// Snapshot wire form (schema_version 1).
nlohmann::json snapshot_message(const SwarmState& state);

// WebSocket endpoint /v1/stream plus GET /v1/scenario and GET /v1/health on
// one port. Networking runs on its own thread; the engine thread only
// serializes decimated snapshots and hands them over.
class TelemetryServer {
public:
    // Binds immediately; throws PortInUse when the port is taken.
    TelemetryServer(TelemetryOptions options, nlohmann::json scenario_descriptor, FormationLibrary library);
    ~TelemetryServer();
    TelemetryServer(const TelemetryServer&) = delete;
    TelemetryServer& operator=(const TelemetryServer&) = delete;

    unsigned short port() const;
    std::size_t client_count() const;

    // Routes snapshots from and commands to `engine` until detach().
    void attach(Engine& engine);
    void detach();

    // Offers a state for broadcast; dropped unless a snapshot period of
    // simulated time has passed since the last one sent.
    void publish(const SwarmState& state);

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

} // namespace flocking
