#pragma once

#include "flock/engine.hpp"
#include "flock/formation.hpp"
#include "flock/trajectory.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace flocking {

using FormationLibrary = std::map<std::string, FormationSpec>;

// A formation is either a document (name, d_min, slots) or a generator
// object: {"shape": "regular"|"line"|"square"|"grid", ...}.
FormationSpec formation_from_json(const nlohmann::json& j);
nlohmann::json formation_to_json(const FormationSpec& spec);

TrajectorySpec trajectory_from_json(const nlohmann::json& j);
nlohmann::json trajectory_to_json(const TrajectorySpec& spec);

// Command objects carry a "type" field: start_trajectory, morph, detach,
// attach, pause, resume, set_speed. Morph targets are a formation object or
// the name of an entry in `library`. Throws ParseError or UnknownFormation.
Command command_from_json(const nlohmann::json& j, const FormationLibrary& library);
nlohmann::json command_to_json(const Command& command);

} // namespace flocking
