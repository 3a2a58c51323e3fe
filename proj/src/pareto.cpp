#include "nndse/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nndse/errors.hpp"

namespace nndse {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
    return (a.error < b.error && a.cost <= b.cost) || (a.cost < b.cost && a.error <= b.error);
}

bool ParetoFront::insert(ObjectivePoint p) {
    for (auto& q : points_) {
        if (dominates(q, p)) return false;
        if (q.error == p.error && q.cost == p.cost) {
            // Duplicate objectives: keep the lowest config_id.
            if (p.config_id < q.config_id) {
                q.config_id = std::move(p.config_id);
                return true;
            }
            return false;
        }
    }
    std::erase_if(points_, [&](const ObjectivePoint& q) { return dominates(p, q); });
    auto pos = std::lower_bound(points_.begin(), points_.end(), p,
                                [](const ObjectivePoint& a, const ObjectivePoint& b) {
                                    return a.cost < b.cost;
                                });
    points_.insert(pos, std::move(p));
    return true;
}

ParetoFront front_of(std::span<const ObjectivePoint> points) {
    ParetoFront f;
    for (const auto& p : points) f.insert(p);
    return f;
}

double delta(const ObjectivePoint& reference, const ObjectivePoint& approx) {
    if (reference.error <= 0.0 || reference.cost <= 0.0)
        throw NormalizationError("delta: reference objectives must be > 0");
    double de = std::max(0.0, (approx.error - reference.error) / reference.error);
    double dc = std::max(0.0, (approx.cost - reference.cost) / reference.cost);
    return std::max(de, dc);
}

double adrs(const ParetoFront& exact, const ParetoFront& approx) {
    if (exact.empty() || approx.empty())
        throw ValidationError("adrs: fronts must be non-empty");
    double sum = 0.0;
    for (const auto& r : exact.points()) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : approx.points()) best = std::min(best, delta(r, a));
        sum += best;
    }
    return sum / static_cast<double>(exact.size());
}

void write_front_csv(std::ostream& os, const ParetoFront& front) {
    os << "config_id,error,cost\n";
    os.precision(17);
    for (const auto& p : front.points())
        os << p.config_id << ',' << p.error << ',' << p.cost << '\n';
}

ParetoFront read_front_csv(std::istream& is) {
    ParetoFront f;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("config_id,", 0) == 0) continue;
        auto c2 = line.rfind(',');
        auto c1 = c2 == std::string::npos ? std::string::npos : line.rfind(',', c2 - 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c1 == 0)
            throw FormatError("front csv: malformed row at line " + std::to_string(lineno));
        ObjectivePoint p;
        p.config_id = line.substr(0, c1);
        try {
            p.error = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
            p.cost = std::stod(line.substr(c2 + 1));
        } catch (const std::exception&) {
            throw FormatError("front csv: bad number at line " + std::to_string(lineno));
        }
        f.insert(std::move(p));
    }
    return f;
}

} // namespace nndse
