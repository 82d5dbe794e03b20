#pragma once

#include "flock/pose.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace flocking {

// Slack applied to every d_min feasibility check (meters). Formation inputs
// are typically typed with four or five decimals; one micrometer keeps a
// rounded radius such as 1.1547 m on the feasible side of its own chord.
inline constexpr double kLengthTolerance = 1e-6;

struct FormationSlot {
    int slot_id = 0;
    Pose offset; // transform from the centroid frame to the slot
};

// An ordered set of slots around the virtual centroid. Constructed specs are
// validated: ids are 0..N-1 in order and every pair of slots is at least
// d_min apart.
class FormationSpec {
public:
    FormationSpec(std::string name, std::vector<FormationSlot> slots, double d_min);
    // Empty placeholder with no slots.
    FormationSpec() = default;

    // Skips validation; used for intermediate shapes produced by a transition.
    static FormationSpec unchecked(std::string name, std::vector<FormationSlot> slots, double d_min);

    const std::string& name() const { return name_; }
    const std::vector<FormationSlot>& slots() const { return slots_; }
    std::size_t size() const { return slots_.size(); }
    double d_min() const { return d_min_; }
    // Largest slot distance from the centroid.
    double d_max() const;
    double min_pairwise_distance() const;

    const FormationSlot& slot(int slot_id) const;
    bool has_slot(int slot_id) const;

    FormationSpec renamed(std::string name) const;

private:
    std::string name_;
    std::vector<FormationSlot> slots_;
    double d_min_ = 0.0;
};

// N slots evenly spread on a circle of radius d_max in the centroid xy-plane,
// slot i at angle 2*pi*i/N, identity orientation.
FormationSpec regular_formation(int n, double d_max, double d_min);

// N slots on the centroid y-axis, centered on the origin, from +y to -y.
FormationSpec line_formation(int n, double spacing, double d_min);

// Four slots on the corners of a square of the given side.
FormationSpec square_formation(double side, double d_min);

// rows x cols lattice centered on the origin; rows along x (front to back).
FormationSpec grid_formation(int rows, int cols, double spacing, double d_min);

FormationSpec load_formation(std::string_view document);
std::string formation_to_document(const FormationSpec& spec);

// Partial mapping old slot id -> new slot id. Unmapped old slots are detached,
// unmapped new slots are vacant.
using SlotMapping = std::map<int, int>;

class FormationTransition {
public:
    // Throws ConstraintViolation when sampled intermediate shapes bring two
    // mapped slots closer than min(from.d_min, to.d_min).
    FormationTransition(FormationSpec from, FormationSpec to, double start_time, double duration,
                        SlotMapping mapping);

    const FormationSpec& from() const { return from_; }
    const FormationSpec& to() const { return to_; }
    double start_time() const { return start_; }
    double duration() const { return duration_; }
    double end_time() const { return start_ + duration_; }
    const SlotMapping& slot_mapping() const { return mapping_; }

    // Progress in [0, 1] for t inside the window, clamped outside.
    double progress(double t) const;
    // Rate of change of the interpolated translation for a new slot id (m/s,
    // centroid frame). Zero for unmapped slots.
    Vec3 translation_rate(int new_slot_id) const;

    static constexpr int kSafetySamples = 100;

private:
    FormationSpec from_;
    FormationSpec to_;
    double start_;
    double duration_;
    SlotMapping mapping_;
};

// Shape at time t: one slot per mapped pair, carrying the new slot id.
// Throws OutOfWindow outside [start_time, start_time + duration].
FormationSpec interpolate(const FormationTransition& tr, double t);

// Removes a slot and renumbers the rest contiguously, preserving order.
FormationSpec detach_slot(const FormationSpec& spec, int slot_id);
// Appends a slot with the next id after checking its distance to every slot.
FormationSpec attach_slot(const FormationSpec& spec, const Pose& offset);

// Shortest-total-distance mapping between the translations of two specs of
// equal size.
SlotMapping match_slots(const FormationSpec& from, const FormationSpec& to);

} // namespace flocking
