#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "coopdrive/core.hpp"
#include "coopdrive/episode.hpp"
#include "coopdrive/expert.hpp"
#include "coopdrive/polyline.hpp"
#include "coopdrive/rng.hpp"
#include "coopdrive/sensor.hpp"
#include "coopdrive/tracker.hpp"

// Scripted accident-prone intersection scenarios. Each script places one ego
// vehicle, at least two connected collaborators, a hazard vehicle whose
// trajectory conflicts with the ego route, and an occluder that blocks the
// ego's line of sight to the hazard during the approach. The ego executes
// the expert policy while labels are being collected; everything else runs
// on fixed routes with simple gap keeping.
//
// Lane convention: right-hand traffic, 3.5 m lanes. The north-south road has
// northbound lanes at x = +1.75 / +5.25 and southbound lanes at x = -1.75
// (left turn) / -5.25 (through); the east-west road mirrors this around y.

namespace coopdrive {

namespace detail {

struct AgentScript {
    int32_t id = 0;
    ObjectKind kind = ObjectKind::traffic;
    double half_extent = 1.0;
    Polyline route;       // static agents have a single-point route
    double cruise = 0.0;  // m/s along the route
    double start_arc = 0.0;
    int32_t follow_id = -1;  // keep a gap behind this agent when set
    double follow_gap = 10.0;
    bool is_hazard = false;
};

struct ScenarioScript {
    std::vector<AgentScript> agents;  // agents[0] is the ego
    Command command = Command::lane_follow;
    double ego_cruise = 10.0;
};

inline Polyline straight(Vec3 a, Vec3 b) { return Polyline({a, b}); }
inline Polyline fixed(Vec3 p) { return Polyline({p}); }

// A truck blocks the ego's lane on a two-way single-lane road and hides the
// oncoming car the ego must yield to while overtaking.
inline ScenarioScript overtaking_script(RngStream& rng, bool include_hazard) {
    ScenarioScript s;
    s.command = Command::change_left;
    s.ego_cruise = rng.uniform(8.0, 11.0);

    const double truck_x = rng.uniform(-5.0, 5.0);
    const double ego_start = rng.uniform(0.0, 8.0);
    const double hazard_x0 = rng.uniform(70.0, 130.0);
    const double hazard_speed = rng.uniform(9.0, 14.0);

    AgentScript ego;
    ego.id = 0;
    ego.kind = ObjectKind::ego;
    ego.route = Polyline({{-70.0, 0.0, 0.0},
                          {truck_x - 18.0, 0.0, 0.0},
                          {truck_x - 6.0, 3.5, 0.0},
                          {truck_x + 12.0, 3.5, 0.0},
                          {truck_x + 24.0, 0.0, 0.0},
                          {400.0, 0.0, 0.0}});
    ego.cruise = s.ego_cruise;
    ego.start_arc = ego_start;
    s.agents.push_back(ego);

    AgentScript truck;
    truck.id = 1;
    truck.kind = ObjectKind::obstacle;
    truck.half_extent = 2.2;
    truck.route = fixed({truck_x, 0.0, 0.0});
    s.agents.push_back(truck);

    if (include_hazard) {
        AgentScript hazard;
        hazard.id = 2;
        hazard.kind = ObjectKind::traffic;
        hazard.route = straight({hazard_x0, 3.5, 0.0}, {-400.0, 3.5, 0.0});
        hazard.cruise = hazard_speed;
        hazard.is_hazard = true;
        s.agents.push_back(hazard);
    }

    AgentScript watcher;  // parked on the far shoulder with a clear view of the oncoming lane
    watcher.id = 3;
    watcher.kind = ObjectKind::collaborator;
    watcher.route = fixed({truck_x + rng.uniform(25.0, 35.0), 7.0, 0.0});
    s.agents.push_back(watcher);

    AgentScript trailer;  // connected car following the ego
    trailer.id = 4;
    trailer.kind = ObjectKind::collaborator;
    trailer.route = straight({-95.0 + rng.uniform(0.0, 6.0), 0.0, 0.0}, {400.0, 0.0, 0.0});
    trailer.cruise = rng.uniform(6.0, 7.5);
    trailer.follow_id = 0;
    s.agents.push_back(trailer);

    AgentScript parked1;
    parked1.id = 5;
    parked1.kind = ObjectKind::obstacle;
    parked1.route = fixed({truck_x - 25.0 + rng.uniform(-2.0, 2.0), -4.0, 0.0});
    s.agents.push_back(parked1);

    AgentScript parked2;
    parked2.id = 6;
    parked2.kind = ObjectKind::obstacle;
    parked2.route = fixed({truck_x + 35.0 + rng.uniform(-2.0, 2.0), -4.0, 0.0});
    s.agents.push_back(parked2);

    return s;
}

// The ego turns left at a yield light; a truck waiting in the opposing
// left-turn lane hides the oncoming through-traffic.
inline ScenarioScript left_turn_script(RngStream& rng, bool include_hazard) {
    ScenarioScript s;
    s.command = Command::turn_left;
    s.ego_cruise = rng.uniform(7.0, 10.0);

    const double ego_start = rng.uniform(0.0, 8.0);
    const double hazard_y0 = rng.uniform(60.0, 110.0);
    const double hazard_speed = rng.uniform(9.0, 14.0);

    // Quarter arc from (1.75, -6) to (-6, 1.75) around (-6, -6).
    std::vector<Vec3> ego_pts{{1.75, -70.0, 0.0}, {1.75, -6.0, 0.0}};
    for (int k = 1; k <= 7; ++k) {
        const double th = (kPi / 2.0) * k / 8.0;
        ego_pts.push_back({-6.0 + 7.75 * std::cos(th), -6.0 + 7.75 * std::sin(th), 0.0});
    }
    ego_pts.push_back({-6.0, 1.75, 0.0});
    ego_pts.push_back({-400.0, 1.75, 0.0});

    AgentScript ego;
    ego.id = 0;
    ego.kind = ObjectKind::ego;
    ego.route = Polyline(std::move(ego_pts));
    ego.cruise = s.ego_cruise;
    ego.start_arc = ego_start;
    s.agents.push_back(ego);

    AgentScript truck;  // opposing left-turn lane, waiting
    truck.id = 1;
    truck.kind = ObjectKind::obstacle;
    truck.half_extent = 2.3;
    truck.route = fixed({-1.75, 8.0, 0.0});
    s.agents.push_back(truck);

    AgentScript queued;  // car behind the truck
    queued.id = 2;
    queued.kind = ObjectKind::traffic;
    queued.route = fixed({-1.75, 13.5, 0.0});
    s.agents.push_back(queued);

    if (include_hazard) {
        AgentScript hazard;  // oncoming through traffic
        hazard.id = 3;
        hazard.kind = ObjectKind::traffic;
        hazard.route = straight({-5.25, hazard_y0, 0.0}, {-5.25, -400.0, 0.0});
        hazard.cruise = hazard_speed;
        hazard.is_hazard = true;
        s.agents.push_back(hazard);
    }

    AgentScript corner;  // connected car held at the light west of the intersection
    corner.id = 4;
    corner.kind = ObjectKind::collaborator;
    corner.route = fixed({-9.0 - rng.uniform(0.0, 3.0), -1.75, 0.0});
    s.agents.push_back(corner);

    AgentScript follower;  // connected car behind the hazard, stops at the light
    follower.id = 5;
    follower.kind = ObjectKind::collaborator;
    follower.route = straight({-5.25, hazard_y0 + rng.uniform(15.0, 25.0), 0.0},
                              {-5.25, 9.0, 0.0});
    follower.cruise = std::max(5.0, hazard_speed - rng.uniform(0.5, 1.5));
    follower.follow_id = include_hazard ? 3 : -1;
    s.agents.push_back(follower);

    AgentScript passer;  // northbound through car, crosses early and legally
    passer.id = 6;
    passer.kind = ObjectKind::traffic;
    passer.route = straight({5.25, -70.0 + rng.uniform(0.0, 15.0), 0.0}, {5.25, 400.0, 0.0});
    passer.cruise = rng.uniform(8.0, 10.0);
    s.agents.push_back(passer);

    return s;
}

// The ego crosses the intersection while a red-light runner approaches from
// the north behind a queue of left-turning cars.
inline ScenarioScript street_crossing_script(RngStream& rng, bool include_hazard) {
    ScenarioScript s;
    s.command = Command::go_straight;
    s.ego_cruise = rng.uniform(8.0, 11.0);

    const double ego_start = rng.uniform(0.0, 8.0);
    const double hazard_y0 = rng.uniform(70.0, 120.0);
    const double hazard_speed = rng.uniform(11.0, 16.0);

    AgentScript ego;
    ego.id = 0;
    ego.kind = ObjectKind::ego;
    ego.route = straight({-75.0 + ego_start, -1.75, 0.0}, {400.0, -1.75, 0.0});
    ego.cruise = s.ego_cruise;
    s.agents.push_back(ego);

    // Five cars lined up in the ego road's left-turn lane.
    for (int k = 0; k < 5; ++k) {
        AgentScript car;
        car.id = 1 + k;
        car.kind = ObjectKind::traffic;
        car.half_extent = 1.15;
        car.route = fixed({-8.0 - 5.2 * k + rng.uniform(-0.3, 0.3), 1.75, 0.0});
        s.agents.push_back(car);
    }

    if (include_hazard) {
        AgentScript hazard;  // red-light runner, southbound through lane
        hazard.id = 6;
        hazard.kind = ObjectKind::traffic;
        hazard.route = straight({-5.25, hazard_y0, 0.0}, {-5.25, -400.0, 0.0});
        hazard.cruise = hazard_speed;
        hazard.is_hazard = true;
        s.agents.push_back(hazard);
    }

    AgentScript corner;  // connected car parked at the northwest corner
    corner.id = 7;
    corner.kind = ObjectKind::collaborator;
    corner.route = fixed({-10.0, 9.0 + rng.uniform(0.0, 2.0), 0.0});
    s.agents.push_back(corner);

    AgentScript follower;  // connected car behind the hazard, obeys the light
    follower.id = 8;
    follower.kind = ObjectKind::collaborator;
    follower.route = straight({-5.25, hazard_y0 + rng.uniform(15.0, 25.0), 0.0},
                              {-5.25, 9.0, 0.0});
    follower.cruise = std::max(5.0, hazard_speed - 1.0 - rng.uniform(0.0, 1.0));
    follower.follow_id = include_hazard ? 6 : -1;
    s.agents.push_back(follower);

    AgentScript passer;  // northbound car crossing on its green, visible to the ego
    passer.id = 9;
    passer.kind = ObjectKind::traffic;
    passer.route = straight({5.25, -75.0 + rng.uniform(0.0, 25.0), 0.0}, {5.25, 400.0, 0.0});
    passer.cruise = rng.uniform(8.0, 10.0);
    s.agents.push_back(passer);

    return s;
}

inline ScenarioScript make_script(ScenarioId scenario, RngStream& rng, bool include_hazard) {
    switch (scenario) {
        case ScenarioId::overtaking: return overtaking_script(rng, include_hazard);
        case ScenarioId::left_turn: return left_turn_script(rng, include_hazard);
        case ScenarioId::street_crossing: return street_crossing_script(rng, include_hazard);
    }
    throw ConfigError("unknown scenario id " + std::to_string(static_cast<int>(scenario)));
}

}  // namespace detail

inline Episode simulate_episode(ScenarioId scenario, uint64_t seed, const ScenarioConfig& cfg = {}) {
    if (cfg.steps <= 0) throw ConfigError("scenario steps must be positive");

    uint64_t seed_state = fnv1a(to_string(scenario)) ^ seed;
    RngStream root(splitmix64(seed_state));
    RngStream script_rng = root.substream(1);
    const detail::ScenarioScript script = detail::make_script(scenario, script_rng, cfg.include_hazard);

    Episode ep;
    ep.scenario = scenario;
    ep.seed = seed;
    ep.config_hash = cfg.content_hash();
    ep.command = script.command;
    ep.ego_cruise = script.ego_cruise;
    ep.ego_route = script.agents.front().route.points;

    struct AgentState {
        double arc = 0.0;
        double speed = 0.0;
    };
    std::vector<AgentState> state(script.agents.size());
    std::vector<int32_t> agent_index_by_id;

    for (size_t i = 0; i < script.agents.size(); ++i) {
        const auto& a = script.agents[i];
        ep.objects.push_back(ObjectMeta{a.id, a.kind, a.half_extent});
        if (a.kind == ObjectKind::ego) ep.connected.insert(ep.connected.begin(), a.id);
        if (a.kind == ObjectKind::collaborator) ep.connected.push_back(a.id);
        if (a.is_hazard) ep.hazard_id = a.id;
        state[i].arc = a.start_arc;
        state[i].speed = std::min(a.cruise, cfg.max_speed);
    }

    auto snapshot = [&](size_t i) {
        const auto& a = script.agents[i];
        const Vec3 pos = a.route.point_at(state[i].arc);
        const double heading = a.route.heading_at(state[i].arc);
        const bool at_end = state[i].arc >= a.route.length() - 1e-9;
        const double v = (a.route.points.size() < 2 || at_end) ? 0.0 : state[i].speed;
        return ObjectState{pos, Vec3{v * std::cos(heading), v * std::sin(heading), 0.0}, heading};
    };

    const EgoPlan plan{Polyline(ep.ego_route), script.ego_cruise};
    std::vector<RngStream> sensor_rng;
    for (size_t v = 0; v < ep.connected.size(); ++v) {
        sensor_rng.push_back(root.substream(100 + v));
    }
    ep.frames.assign(ep.connected.size(), {});

    std::vector<std::vector<Frame>> raw(ep.connected.size());
    const double dt = kTickSeconds;

    for (int32_t step = 0; step < cfg.steps; ++step) {
        // Record the world, the label, and every vehicle's raw observation.
        std::vector<ObjectState> now(script.agents.size());
        for (size_t i = 0; i < script.agents.size(); ++i) now[i] = snapshot(i);
        ep.world.push_back(now);

        std::vector<WorldObject> world = ep.world_at(step);
        const Action action = expert_action(world, ep.ego_id(), plan, cfg.expert);
        ep.expert_actions.push_back(action);

        for (size_t v = 0; v < ep.connected.size(); ++v) {
            const Pose pose = ep.pose_of(ep.connected[v], step);
            raw[v].push_back(observe(world, ep.connected[v], pose, step, cfg.sensor, sensor_rng[v]));
        }

        // Advance.
        for (size_t i = 0; i < script.agents.size(); ++i) {
            const auto& a = script.agents[i];
            if (a.route.points.size() < 2) continue;
            double& v = state[i].speed;
            if (a.kind == ObjectKind::ego) {
                if (action == Action::brake) {
                    v = std::max(0.0, v - cfg.ego_brake_decel * dt);
                } else {
                    v = std::min(std::min(a.cruise, cfg.max_speed), v + cfg.ego_accel * dt);
                }
            } else {
                double target = std::min(a.cruise, cfg.max_speed);
                // ease into route ends (stop lines) instead of halting abruptly
                target = std::min(target, (a.route.length() - state[i].arc) / 2.5);
                if (a.follow_id >= 0) {
                    const int32_t li = ep.object_index(a.follow_id);
                    if (li >= 0) {
                        const Vec3 my = a.route.point_at(state[i].arc);
                        const ObjectState& lead = now[static_cast<size_t>(li)];
                        if (distance(my, lead.position) < a.follow_gap) {
                            target = std::min(target, 0.9 * lead.velocity.norm2d());
                        }
                    }
                }
                v += std::clamp(target - v, -cfg.ego_brake_decel * dt, cfg.ego_accel * dt);
            }
            state[i].arc = std::min(state[i].arc + v * dt, script.agents[i].route.length());
        }
    }

    // Associate tracks in the world frame (ego-motion compensated), then keep
    // the sensor-frame positions with the assigned ids.
    for (size_t v = 0; v < ep.connected.size(); ++v) {
        Tracker tracker(cfg.tracker);
        for (int32_t step = 0; step < cfg.steps; ++step) {
            const Pose pose = ep.pose_of(ep.connected[v], step);
            Frame world_frame = raw[v][static_cast<size_t>(step)];
            for (Detection& d : world_frame.detections) d.position = pose.to_world(d.position);
            Frame tracked = tracker.step(world_frame);
            for (Detection& d : tracked.detections) d.position = pose.to_body(d.position);
            ep.frames[v].push_back(std::move(tracked));
        }
    }

    (void)agent_index_by_id;
    return ep;
}

}  // namespace coopdrive
