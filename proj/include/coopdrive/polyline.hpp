#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coopdrive/core.hpp"

namespace coopdrive {

// Piecewise-linear route with arc-length addressing. Queries clamp to the
// endpoints, so a vehicle that reaches the end of its route simply stops.
struct Polyline {
    std::vector<Vec3> points;
    std::vector<double> cumulative;  // arc length at each vertex

    Polyline() = default;
    explicit Polyline(std::vector<Vec3> pts) : points(std::move(pts)) { rebuild(); }

    void rebuild() {
        cumulative.resize(points.size());
        double s = 0.0;
        for (size_t i = 0; i < points.size(); ++i) {
            if (i > 0) s += distance(points[i - 1], points[i]);
            cumulative[i] = s;
        }
    }

    double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }

    Vec3 point_at(double s) const {
        if (points.empty()) return {};
        if (s <= 0.0 || points.size() == 1) return points.front();
        if (s >= length()) return points.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
        const size_t i = static_cast<size_t>(it - cumulative.begin());
        const double seg = cumulative[i] - cumulative[i - 1];
        const double f = seg > 0.0 ? (s - cumulative[i - 1]) / seg : 0.0;
        return points[i - 1] + (points[i] - points[i - 1]) * f;
    }

    double heading_at(double s) const {
        if (points.size() < 2) return 0.0;
        size_t i = 1;
        while (i + 1 < points.size() && cumulative[i] <= s) ++i;
        const Vec3 d = points[i] - points[i - 1];
        return std::atan2(d.y, d.x);
    }

    /// Arc length of the closest point on the polyline to p (2D).
    double project(const Vec3& p) const {
        double best_d2 = std::numeric_limits<double>::max();
        double best_s = 0.0;
        for (size_t i = 1; i < points.size(); ++i) {
            const Vec3& a = points[i - 1];
            const Vec3& b = points[i];
            const double dx = b.x - a.x, dy = b.y - a.y;
            const double len2 = dx * dx + dy * dy;
            double t = 0.0;
            if (len2 > 0.0) {
                t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
            }
            const double cx = a.x + t * dx, cy = a.y + t * dy;
            const double d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
            if (d2 < best_d2) {
                best_d2 = d2;
                best_s = cumulative[i - 1] + t * std::sqrt(len2);
            }
        }
        return best_s;
    }
};

}  // namespace coopdrive
