#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nndse {

// One evaluated design in objective space; both objectives are minimized.
struct ObjectivePoint {
    double error = 0.0;
    double cost = 0.0;
    std::string config_id;

    bool operator==(const ObjectivePoint&) const = default;
};

// a dominates b: strictly better in one objective, no worse in the other.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

// Non-dominated set, kept sorted by ascending cost (errors strictly
// descending). Points with equal objectives deduplicate to the lowest
// config_id.
class ParetoFront {
public:
    // Returns true when p joins the front (possibly evicting members).
    bool insert(ObjectivePoint p);

    const std::vector<ObjectivePoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    bool operator==(const ParetoFront&) const = default;

private:
    std::vector<ObjectivePoint> points_;
};

// Brute-force O(n^2) dominance filter; the oracle for incremental insert.
ParetoFront front_of(std::span<const ObjectivePoint> points);

// Normalized distance: per-objective relative excess of approx over the
// reference, clamped at zero, combined by max.
double delta(const ObjectivePoint& reference, const ObjectivePoint& approx);

// Average Distance from Reference Set: mean over the exact front of each
// member's minimum delta to the approximate front.
double adrs(const ParetoFront& exact, const ParetoFront& approx);

void write_front_csv(std::ostream& os, const ParetoFront& front);
ParetoFront read_front_csv(std::istream& is);

} // namespace nndse
