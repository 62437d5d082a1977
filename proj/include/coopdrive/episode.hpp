#pragma once

#include <cstdint>
#include <vector>

#include "coopdrive/core.hpp"
#include "coopdrive/expert.hpp"
#include "coopdrive/sensor.hpp"
#include "coopdrive/tracker.hpp"

namespace coopdrive {

struct ScenarioConfig {
    int32_t steps = 300;
    double max_speed = 20.0;
    bool include_hazard = true;
    double ego_brake_decel = 6.0;  // m/s^2 applied on brake
    double ego_accel = 3.0;        // m/s^2 applied on go
    SensorConfig sensor;
    TrackerConfig tracker;
    ExpertConfig expert;

    uint64_t content_hash() const {
        uint64_t h = fnv1a("scenario-config-v1");
        auto mix = [&h](double v) { h = fnv1a(&v, sizeof(v), h); };
        h = fnv1a(&steps, sizeof(steps), h);
        mix(max_speed);
        const uint8_t hz = include_hazard ? 1 : 0;
        h = fnv1a(&hz, 1, h);
        mix(ego_brake_decel);
        mix(ego_accel);
        mix(sensor.range);
        mix(sensor.fov);
        mix(sensor.noise_sigma);
        mix(sensor.dropout);
        const uint8_t grid = sensor.centimeter_grid ? 1 : 0;
        h = fnv1a(&grid, 1, h);
        mix(tracker.gate);
        mix(expert.clearance);
        mix(expert.horizon);
        mix(expert.sample_dt);
        return h;
    }
};

struct ObjectMeta {
    int32_t id = 0;
    ObjectKind kind = ObjectKind::traffic;
    double half_extent = 1.0;
};

struct ObjectState {
    Vec3 position;
    Vec3 velocity;
    double heading = 0.0;
};

// One simulated trial. The full world trajectory is stored so that the
// expert labels and every recorded detection can be re-checked against the
// ground truth. Frames hold sensor-frame detections at capture time with
// track ids already assigned (association runs in the world frame using each
// vehicle's own pose).
struct Episode {
    ScenarioId scenario = ScenarioId::overtaking;
    uint64_t seed = 0;
    uint64_t config_hash = 0;
    Command command = Command::lane_follow;
    int32_t hazard_id = -1;  // -1 when the hazard was disabled

    std::vector<ObjectMeta> objects;
    std::vector<int32_t> connected;  // object ids of connected vehicles, ego first

    std::vector<Action> expert_actions;               // [step]
    std::vector<std::vector<ObjectState>> world;      // [step][object index]
    std::vector<std::vector<Frame>> frames;           // [connected vehicle][step]

    std::vector<Vec3> ego_route;  // the ego plan, needed to replay the expert
    double ego_cruise = 0.0;

    int32_t steps() const { return static_cast<int32_t>(expert_actions.size()); }
    int32_t ego_id() const { return connected.empty() ? -1 : connected.front(); }

    int32_t object_index(int32_t object_id) const {
        for (size_t i = 0; i < objects.size(); ++i) {
            if (objects[i].id == object_id) return static_cast<int32_t>(i);
        }
        return -1;
    }

    Pose pose_of(int32_t object_id, int32_t step) const {
        const int32_t idx = object_index(object_id);
        const ObjectState& s = world[static_cast<size_t>(step)][static_cast<size_t>(idx)];
        return Pose{s.position, s.heading};
    }

    /// Ground-truth world snapshot at one step.
    std::vector<WorldObject> world_at(int32_t step) const {
        std::vector<WorldObject> out;
        out.reserve(objects.size());
        for (size_t i = 0; i < objects.size(); ++i) {
            const ObjectState& s = world[static_cast<size_t>(step)][i];
            out.push_back(WorldObject{objects[i].id, objects[i].kind, s.position, s.velocity,
                                      s.heading, objects[i].half_extent});
        }
        return out;
    }
};

}  // namespace coopdrive
