#pragma once

#include <algorithm>
#include <span>

#include "coopdrive/core.hpp"
#include "coopdrive/polyline.hpp"

// Deterministic brake/go oracle used to label training data. The ego intends
// to proceed along its planned route at cruise speed; every other object is
// extrapolated at constant velocity. At each future instant inside the
// horizon the ego claims a guard stretch of its path, from its predicted
// position to guard_time seconds further ahead. If any object is predicted
// inside the lateral clearance of that stretch, the safe action is to brake.
// Followers and faster leading traffic never enter the stretch; crossing or
// oncoming traffic does, for the whole interval it blocks the path.

namespace coopdrive {

struct EgoPlan {
    Polyline route;
    double cruise_speed = 10.0;  // m/s, the "go" intent
};

struct ExpertConfig {
    double clearance = 2.0;   // meters around the claimed path stretch
    double horizon = 3.0;     // seconds, time-to-collision horizon
    double guard_time = 1.5;  // seconds of path claimed ahead of the predicted position
    double sample_dt = 0.02;  // prediction sampling step
};

namespace detail {

/// 2D distance from p to the sub-polyline between arc lengths [s_lo, s_hi].
inline double distance_to_span(const Polyline& line, const Vec3& p, double s_lo, double s_hi) {
    const double len = line.length();
    s_lo = std::clamp(s_lo, 0.0, len);
    s_hi = std::clamp(s_hi, s_lo, len);
    double best = std::numeric_limits<double>::max();
    for (size_t i = 1; i < line.points.size(); ++i) {
        const double seg_lo = line.cumulative[i - 1];
        const double seg_hi = line.cumulative[i];
        if (seg_hi < s_lo || seg_lo > s_hi) continue;
        const double seg_len = seg_hi - seg_lo;
        double t0 = 0.0, t1 = 1.0;
        if (seg_len > 0.0) {
            t0 = std::clamp((s_lo - seg_lo) / seg_len, 0.0, 1.0);
            t1 = std::clamp((s_hi - seg_lo) / seg_len, 0.0, 1.0);
        }
        const Vec3& a = line.points[i - 1];
        const Vec3& b = line.points[i];
        const Vec3 lo{a.x + (b.x - a.x) * t0, a.y + (b.y - a.y) * t0, 0.0};
        const Vec3 hi{a.x + (b.x - a.x) * t1, a.y + (b.y - a.y) * t1, 0.0};
        const double dx = hi.x - lo.x, dy = hi.y - lo.y;
        const double l2 = dx * dx + dy * dy;
        double t = 0.0;
        if (l2 > 0.0) t = std::clamp(((p.x - lo.x) * dx + (p.y - lo.y) * dy) / l2, 0.0, 1.0);
        const double ex = p.x - (lo.x + t * dx), ey = p.y - (lo.y + t * dy);
        best = std::min(best, ex * ex + ey * ey);
    }
    return best == std::numeric_limits<double>::max() ? best : std::sqrt(best);
}

}  // namespace detail

inline Action expert_action(std::span<const WorldObject> world, int32_t ego_id,
                            const EgoPlan& plan, const ExpertConfig& cfg = {}) {
    const WorldObject* ego = nullptr;
    for (const WorldObject& o : world) {
        if (o.id == ego_id) ego = &o;
    }
    if (ego == nullptr || plan.route.points.size() < 2) return Action::go;

    const double s0 = plan.route.project(ego->position);
    const double guard = plan.cruise_speed * cfg.guard_time;
    for (const WorldObject& obj : world) {
        if (obj.id == ego_id) continue;
        for (double tau = 0.0; tau <= cfg.horizon + 1e-9; tau += cfg.sample_dt) {
            const Vec3 pred = obj.position + obj.velocity * tau;
            const double s = s0 + plan.cruise_speed * tau;
            if (detail::distance_to_span(plan.route, pred, s, s + guard) < cfg.clearance) {
                return Action::brake;
            }
        }
    }
    return Action::go;
}

}  // namespace coopdrive
