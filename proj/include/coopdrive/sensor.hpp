#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "coopdrive/core.hpp"
#include "coopdrive/rng.hpp"

// Oracle detector with configurable imperfections, standing in for an
// image-based detection pipeline. An object is detected iff it is within
// range, inside the field of view, not shadowed by another object's bounding
// disc, and not dropped by the per-detection dropout draw. Reported positions
// are in the observer's body frame with additive noise, at centimeter
// resolution (the wire codec is lossless for in-contract sensor data).

namespace coopdrive {

struct SensorConfig {
    double range = 60.0;            // meters
    double fov = 2.0 * kPi;         // radians, full circle by default
    double noise_sigma = 0.1;       // meters, per horizontal axis
    double dropout = 0.05;          // per-object per-frame miss probability
    bool centimeter_grid = true;    // snap reported positions to 1 cm
};

/// True when the 2D segment a->b stays clear of the disc (center c, radius r).
inline bool segment_clears_disc(const Vec3& a, const Vec3& b, const Vec3& c, double r) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((c.x - a.x) * dx + (c.y - a.y) * dy) / len2, 0.0, 1.0);
    }
    const double px = a.x + t * dx, py = a.y + t * dy;
    const double d2 = (c.x - px) * (c.x - px) + (c.y - py) * (c.y - py);
    return d2 >= r * r;
}

/// Line-of-sight test against every other object's bounding disc.
inline bool line_of_sight_clear(std::span<const WorldObject> world, const Vec3& observer_pos,
                                int32_t observer_id, int32_t target_id, const Vec3& target_pos) {
    for (const WorldObject& o : world) {
        if (o.id == observer_id || o.id == target_id) continue;
        if (!segment_clears_disc(observer_pos, target_pos, o.position, o.half_extent)) {
            return false;
        }
    }
    return true;
}

inline Frame observe(std::span<const WorldObject> world, int32_t observer_id,
                     const Pose& observer, int32_t t_ds, const SensorConfig& cfg,
                     RngStream& rng) {
    Frame frame;
    frame.vehicle_id = observer_id;
    frame.t_ds = t_ds;

    for (const WorldObject& obj : world) {
        if (obj.id == observer_id) continue;
        const Vec3 rel = observer.to_body(obj.position);
        const double range = rel.norm2d();
        if (range > cfg.range) continue;
        if (cfg.fov < 2.0 * kPi && range > 1e-9) {
            if (std::abs(std::atan2(rel.y, rel.x)) > cfg.fov * 0.5) continue;
        }
        if (!line_of_sight_clear(world, observer.position, observer_id, obj.id, obj.position)) {
            continue;
        }
        if (rng.bernoulli(cfg.dropout)) continue;

        Vec3 reported = rel;
        if (cfg.noise_sigma > 0.0) {
            reported.x += rng.normal(0.0, cfg.noise_sigma);
            reported.y += rng.normal(0.0, cfg.noise_sigma);
        }
        if (cfg.centimeter_grid) {
            reported.x = std::llround(reported.x * 100.0) * 0.01;
            reported.y = std::llround(reported.y * 100.0) * 0.01;
            reported.z = std::llround(reported.z * 100.0) * 0.01;
        }
        frame.detections.push_back(Detection{-1, reported});
    }
    return frame;
}

}  // namespace coopdrive
