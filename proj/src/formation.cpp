#include "flock/formation.hpp"

#include "flock/assignment.hpp"
#include "flock/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace flocking {

namespace {

using nlohmann::json;

double min_distance(const std::vector<FormationSlot>& slots)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < slots.size(); ++i)
        for (std::size_t j = i + 1; j < slots.size(); ++j)
            best = std::min(best, distance(slots[i].offset.translation, slots[j].offset.translation));
    return best;
}

void check_separation(const std::vector<FormationSlot>& slots, double d_min, const std::string& what)
{
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) {
            const double d = distance(slots[i].offset.translation, slots[j].offset.translation);
            if (d < d_min - kLengthTolerance) {
                std::ostringstream os;
                os << what << ": slots " << slots[i].slot_id << " and " << slots[j].slot_id << " are "
                   << d << " m apart, below d_min " << d_min << " m";
                throw Error(ErrorKind::ConstraintViolation, os.str());
            }
        }
    }
}

std::vector<FormationSlot> renumber(std::vector<FormationSlot> slots)
{
    for (std::size_t i = 0; i < slots.size(); ++i)
        slots[i].slot_id = static_cast<int>(i);
    return slots;
}

Vec3 read_vec3(const json& j, const char* field)
{
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must be an array of 3 numbers");
    Vec3 v;
    for (std::size_t k = 0; k < 3; ++k)
        if (!j[k].is_number())
            throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must contain numbers");
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    if (!v.finite())
        throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must be finite");
    return v;
}

} // namespace

FormationSpec::FormationSpec(std::string name, std::vector<FormationSlot> slots, double d_min)
    : name_(std::move(name)), slots_(std::move(slots)), d_min_(d_min)
{
    if (slots_.empty())
        throw Error(ErrorKind::EmptyFormation, "formation '" + name_ + "' has no slots");
    if (!(d_min_ > 0.0) || !std::isfinite(d_min_))
        throw Error(ErrorKind::ConstraintViolation, "d_min must be a positive number of meters");
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].slot_id != static_cast<int>(i))
            throw Error(ErrorKind::ParseError, "slot ids must be contiguous from 0 in order");
        if (!slots_[i].offset.translation.finite())
            throw Error(ErrorKind::ParseError, "slot offsets must be finite");
    }
    check_separation(slots_, d_min_, "formation '" + name_ + "'");
}

FormationSpec FormationSpec::unchecked(std::string name, std::vector<FormationSlot> slots, double d_min)
{
    FormationSpec spec;
    spec.name_ = std::move(name);
    spec.slots_ = std::move(slots);
    spec.d_min_ = d_min;
    return spec;
}

double FormationSpec::d_max() const
{
    double best = 0.0;
    for (const auto& s : slots_)
        best = std::max(best, s.offset.translation.norm());
    return best;
}

double FormationSpec::min_pairwise_distance() const { return min_distance(slots_); }

bool FormationSpec::has_slot(int slot_id) const
{
    return slot_id >= 0 && static_cast<std::size_t>(slot_id) < slots_.size();
}

const FormationSlot& FormationSpec::slot(int slot_id) const
{
    if (!has_slot(slot_id))
        throw Error(ErrorKind::UnknownSlot, "no slot " + std::to_string(slot_id) + " in formation '" + name_ + "'");
    return slots_[static_cast<std::size_t>(slot_id)];
}

FormationSpec FormationSpec::renamed(std::string name) const
{
    FormationSpec copy = *this;
    copy.name_ = std::move(name);
    return copy;
}

FormationSpec regular_formation(int n, double d_max, double d_min)
{
    if (n < 1)
        throw Error(ErrorKind::ConstraintViolation, "regular formation needs at least one slot");
    if (!(d_max > 0.0) || !(d_min > 0.0))
        throw Error(ErrorKind::ConstraintViolation, "d_max and d_min must be positive");

    if (n >= 2) {
        const double chord = 2.0 * d_max * std::sin(kPi / n);
        if (chord < d_min - kLengthTolerance) {
            // Largest feasible N for this radius (sin(pi/N) decreases with N).
            int max_n = 1;
            for (int k = 2; k <= n; ++k)
                if (2.0 * d_max * std::sin(kPi / k) >= d_min - kLengthTolerance)
                    max_n = k;
            const double min_radius = d_min / (2.0 * std::sin(kPi / n));
            std::ostringstream os;
            os << "chord " << chord << " m between adjacent slots is below d_min " << d_min
               << " m; at radius " << d_max << " m at most " << max_n << " slot(s) fit, and " << n
               << " slots need radius >= " << min_radius << " m";
            throw Error(ErrorKind::ConstraintViolation, os.str());
        }
    }

    std::vector<FormationSlot> slots;
    slots.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * i / n;
        slots.push_back({i, Pose::from_translation({d_max * std::cos(theta), d_max * std::sin(theta), 0.0})});
    }
    return FormationSpec("regular-" + std::to_string(n), std::move(slots), d_min);
}

FormationSpec line_formation(int n, double spacing, double d_min)
{
    if (n < 2)
        throw Error(ErrorKind::ConstraintViolation, "line formation needs at least two slots");
    if (!(spacing > 0.0))
        throw Error(ErrorKind::ConstraintViolation, "line spacing must be positive");
    if (spacing < d_min - kLengthTolerance)
        throw Error(ErrorKind::ConstraintViolation, "line spacing is below d_min");
    std::vector<FormationSlot> slots;
    const double half = 0.5 * (n - 1);
    for (int i = 0; i < n; ++i)
        slots.push_back({i, Pose::from_translation({0.0, (half - i) * spacing, 0.0})});
    return FormationSpec("line-" + std::to_string(n), std::move(slots), d_min);
}

FormationSpec square_formation(double side, double d_min)
{
    if (!(side > 0.0))
        throw Error(ErrorKind::ConstraintViolation, "square side must be positive");
    const double h = side / 2.0;
    std::vector<FormationSlot> slots{{0, Pose::from_translation({h, h, 0.0})},
                                     {1, Pose::from_translation({-h, h, 0.0})},
                                     {2, Pose::from_translation({-h, -h, 0.0})},
                                     {3, Pose::from_translation({h, -h, 0.0})}};
    return FormationSpec("square", std::move(slots), d_min);
}

FormationSpec grid_formation(int rows, int cols, double spacing, double d_min)
{
    if (rows < 1 || cols < 1 || rows * cols < 1)
        throw Error(ErrorKind::ConstraintViolation, "grid needs at least one row and one column");
    if (!(spacing > 0.0))
        throw Error(ErrorKind::ConstraintViolation, "grid spacing must be positive");
    std::vector<FormationSlot> slots;
    const double rx = 0.5 * (rows - 1);
    const double cy = 0.5 * (cols - 1);
    int id = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            slots.push_back({id++, Pose::from_translation({(rx - r) * spacing, (cy - c) * spacing, 0.0})});
    return FormationSpec("grid-" + std::to_string(rows) + "x" + std::to_string(cols), std::move(slots), d_min);
}

FormationSpec load_formation(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("formation document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw Error(ErrorKind::ParseError, "formation document must be an object");

    std::string name = "custom";
    if (doc.contains("name")) {
        if (!doc["name"].is_string())
            throw Error(ErrorKind::ParseError, "'name' must be a string");
        name = doc["name"].get<std::string>();
    }
    if (!doc.contains("d_min") || !doc["d_min"].is_number())
        throw Error(ErrorKind::ParseError, "'d_min' must be a number");
    const double d_min = doc["d_min"].get<double>();
    if (!doc.contains("slots") || !doc["slots"].is_array())
        throw Error(ErrorKind::ParseError, "'slots' must be a list");
    if (doc["slots"].empty())
        throw Error(ErrorKind::ParseError, "'slots' must not be empty");

    std::vector<FormationSlot> slots;
    std::set<int> seen;
    for (const auto& s : doc["slots"]) {
        if (!s.is_object() || !s.contains("id") || !s["id"].is_number_integer())
            throw Error(ErrorKind::ParseError, "each slot needs an integer 'id'");
        const int id = s["id"].get<int>();
        if (!seen.insert(id).second)
            throw Error(ErrorKind::DuplicateSlotId, "duplicate slot id " + std::to_string(id));
        if (!s.contains("xyz"))
            throw Error(ErrorKind::ParseError, "slot " + std::to_string(id) + " lacks 'xyz'");
        const Vec3 xyz = read_vec3(s["xyz"], "xyz");
        Vec3 rpy;
        if (s.contains("rpy_deg"))
            rpy = read_vec3(s["rpy_deg"], "rpy_deg");
        const auto rot = UnitQuaternion::from_rpy(deg_to_rad(rpy.x), deg_to_rad(rpy.y), deg_to_rad(rpy.z));
        slots.push_back({id, Pose{rot, xyz}});
    }
    std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) { return a.slot_id < b.slot_id; });
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i].slot_id != static_cast<int>(i))
            throw Error(ErrorKind::ParseError, "slot ids must form the range 0..N-1");
    return FormationSpec(std::move(name), std::move(slots), d_min);
}

std::string formation_to_document(const FormationSpec& spec)
{
    json doc;
    doc["name"] = spec.name();
    doc["d_min"] = spec.d_min();
    doc["slots"] = json::array();
    for (const auto& s : spec.slots()) {
        const auto& q = s.offset.rotation;
        const auto& t = s.offset.translation;
        json slot;
        slot["id"] = s.slot_id;
        slot["xyz"] = {t.x, t.y, t.z};
        // roll/pitch/yaw recovered from the quaternion (ZYX)
        const double roll = std::atan2(2.0 * (q.w() * q.x() + q.y() * q.z()),
                                       1.0 - 2.0 * (q.x() * q.x() + q.y() * q.y()));
        const double pitch = std::asin(std::clamp(2.0 * (q.w() * q.y() - q.z() * q.x()), -1.0, 1.0));
        const double yaw = q.yaw();
        if (roll != 0.0 || pitch != 0.0 || yaw != 0.0)
            slot["rpy_deg"] = {rad_to_deg(roll), rad_to_deg(pitch), rad_to_deg(yaw)};
        doc["slots"].push_back(slot);
    }
    return doc.dump(2) + "\n";
}

FormationTransition::FormationTransition(FormationSpec from, FormationSpec to, double start_time,
                                         double duration, SlotMapping mapping)
    : from_(std::move(from)), to_(std::move(to)), start_(start_time), duration_(duration),
      mapping_(std::move(mapping))
{
    if (!(duration_ > 0.0) || !std::isfinite(duration_))
        throw Error(ErrorKind::ConstraintViolation, "transition duration must be positive");
    std::set<int> targets;
    for (const auto& [old_id, new_id] : mapping_) {
        if (!from_.has_slot(old_id))
            throw Error(ErrorKind::UnknownSlot, "mapping refers to unknown source slot " + std::to_string(old_id));
        if (!to_.has_slot(new_id))
            throw Error(ErrorKind::UnknownSlot, "mapping refers to unknown target slot " + std::to_string(new_id));
        if (!targets.insert(new_id).second)
            throw Error(ErrorKind::DuplicateSlotId, "two slots map onto target slot " + std::to_string(new_id));
    }

    const double d_min = std::min(from_.d_min(), to_.d_min());
    for (int k = 0; k < kSafetySamples; ++k) {
        const double t = k == kSafetySamples - 1 ? end_time() : start_ + duration_ * k / (kSafetySamples - 1);
        const FormationSpec shape = interpolate(*this, t);
        check_separation(shape.slots(), d_min, "transition to '" + to_.name() + "'");
    }
}

double FormationTransition::progress(double t) const
{
    return std::clamp((t - start_) / duration_, 0.0, 1.0);
}

Vec3 FormationTransition::translation_rate(int new_slot_id) const
{
    for (const auto& [old_id, new_id] : mapping_)
        if (new_id == new_slot_id)
            return (to_.slot(new_id).offset.translation - from_.slot(old_id).offset.translation) / duration_;
    return {};
}

FormationSpec interpolate(const FormationTransition& tr, double t)
{
    if (t < tr.start_time() || t > tr.end_time())
        throw Error(ErrorKind::OutOfWindow, "time " + std::to_string(t) + " lies outside the transition window");
    const double s = tr.progress(t);

    std::vector<std::pair<int, Pose>> by_new;
    for (const auto& [old_id, new_id] : tr.slot_mapping()) {
        const Pose& a = tr.from().slot(old_id).offset;
        const Pose& b = tr.to().slot(new_id).offset;
        Pose p;
        if (s == 0.0) {
            p = a;
        } else if (s == 1.0) {
            p = b;
        } else {
            p.translation = a.translation + (b.translation - a.translation) * s;
            p.rotation = slerp(a.rotation, b.rotation, s);
        }
        by_new.emplace_back(new_id, p);
    }
    std::sort(by_new.begin(), by_new.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<FormationSlot> slots;
    slots.reserve(by_new.size());
    for (const auto& [id, pose] : by_new)
        slots.push_back({id, pose});
    return FormationSpec::unchecked(tr.to().name(), std::move(slots), tr.to().d_min());
}

FormationSpec detach_slot(const FormationSpec& spec, int slot_id)
{
    if (!spec.has_slot(slot_id))
        throw Error(ErrorKind::UnknownSlot, "no slot " + std::to_string(slot_id) + " to detach");
    if (spec.size() == 1)
        throw Error(ErrorKind::EmptyFormation, "detaching the last slot would leave an empty formation");
    std::vector<FormationSlot> slots;
    for (const auto& s : spec.slots())
        if (s.slot_id != slot_id)
            slots.push_back(s);
    return FormationSpec(spec.name(), renumber(std::move(slots)), spec.d_min());
}

FormationSpec attach_slot(const FormationSpec& spec, const Pose& offset)
{
    if (!offset.translation.finite())
        throw Error(ErrorKind::ConstraintViolation, "attached slot offset must be finite");
    for (const auto& s : spec.slots()) {
        const double d = distance(s.offset.translation, offset.translation);
        if (d < spec.d_min() - kLengthTolerance) {
            std::ostringstream os;
            os << "new slot is " << d << " m from slot " << s.slot_id << ", below d_min " << spec.d_min() << " m";
            throw Error(ErrorKind::ConstraintViolation, os.str());
        }
    }
    std::vector<FormationSlot> slots = spec.slots();
    slots.push_back({static_cast<int>(slots.size()), offset});
    return FormationSpec(spec.name(), std::move(slots), spec.d_min());
}

SlotMapping match_slots(const FormationSpec& from, const FormationSpec& to)
{
    if (from.size() != to.size())
        throw Error(ErrorKind::CountMismatch, "formations have " + std::to_string(from.size()) + " and " +
                                                  std::to_string(to.size()) + " slots");
    std::vector<std::vector<double>> cost(from.size(), std::vector<double>(to.size()));
    for (std::size_t i = 0; i < from.size(); ++i)
        for (std::size_t j = 0; j < to.size(); ++j)
            cost[i][j] = distance(from.slots()[i].offset.translation, to.slots()[j].offset.translation);
    const auto cols = min_cost_assignment(cost);
    SlotMapping mapping;
    for (std::size_t i = 0; i < cols.size(); ++i)
        mapping[static_cast<int>(i)] = cols[i];
    return mapping;
}

} // namespace flocking
