#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "coopdrive/bytes.hpp"
#include "coopdrive/core.hpp"
#include "coopdrive/episode.hpp"

// Episode trial files: self-describing header followed by per-timestep
// records. Little-endian, fixed layout, version-gated. A text export exists
// for eyeballing trials; the binary form is the canonical artifact.
//
// Layout v1:
//   u32  magic "CADE"            u16  format version (= 1)
//   u8   scenario                u8   ego command
//   u64  seed                    u64  scenario config hash
//   i32  hazard object id (-1 when disabled)
//   u16  step count              u16  object count
//   u16  connected vehicle count u16  reserved (0)
//   f64  ego cruise speed
//   u16  ego route point count, then f64 x,y,z per point
//   per object:    i32 id, u8 kind, f64 half_extent
//   per connected: i32 object id (ego first)
//   per step:
//     u8 expert action
//     per object: f64 x, y, vx, vy, heading      (planar state, z = 0)
//     per connected vehicle:
//       u16 detection count, then per detection i32 track id, f64 x, y, z

namespace coopdrive {

inline constexpr uint32_t kEpisodeMagic = 0x45444143;  // "CADE"
inline constexpr uint16_t kEpisodeFormatVersion = 1;

inline std::vector<uint8_t> serialize_episode(const Episode& ep) {
    ByteWriter out;
    out.u32(kEpisodeMagic);
    out.u16(kEpisodeFormatVersion);
    out.u8(static_cast<uint8_t>(ep.scenario));
    out.u8(static_cast<uint8_t>(ep.command));
    out.u64(ep.seed);
    out.u64(ep.config_hash);
    out.i32(ep.hazard_id);
    out.u16(static_cast<uint16_t>(ep.steps()));
    out.u16(static_cast<uint16_t>(ep.objects.size()));
    out.u16(static_cast<uint16_t>(ep.connected.size()));
    out.u16(0);
    out.f64(ep.ego_cruise);
    out.u16(static_cast<uint16_t>(ep.ego_route.size()));
    for (const Vec3& p : ep.ego_route) {
        out.f64(p.x);
        out.f64(p.y);
        out.f64(p.z);
    }
    for (const ObjectMeta& o : ep.objects) {
        out.i32(o.id);
        out.u8(static_cast<uint8_t>(o.kind));
        out.f64(o.half_extent);
    }
    for (int32_t id : ep.connected) out.i32(id);

    for (int32_t step = 0; step < ep.steps(); ++step) {
        out.u8(static_cast<uint8_t>(ep.expert_actions[static_cast<size_t>(step)]));
        for (const ObjectState& s : ep.world[static_cast<size_t>(step)]) {
            out.f64(s.position.x);
            out.f64(s.position.y);
            out.f64(s.velocity.x);
            out.f64(s.velocity.y);
            out.f64(s.heading);
        }
        for (size_t v = 0; v < ep.connected.size(); ++v) {
            const Frame& f = ep.frames[v][static_cast<size_t>(step)];
            out.u16(static_cast<uint16_t>(f.detections.size()));
            for (const Detection& d : f.detections) {
                out.i32(d.track_id);
                out.f64(d.position.x);
                out.f64(d.position.y);
                out.f64(d.position.z);
            }
        }
    }
    return out.take();
}

inline Episode deserialize_episode(std::span<const uint8_t> bytes) {
    ByteReader in(bytes.data(), bytes.size());
    if (in.u32() != kEpisodeMagic) throw DecodeError("not an episode file", 0);
    const uint16_t version = in.u16();
    if (version != kEpisodeFormatVersion) {
        throw DecodeError("unsupported episode format version " + std::to_string(version), 4);
    }

    Episode ep;
    ep.scenario = static_cast<ScenarioId>(in.u8());
    ep.command = static_cast<Command>(in.u8());
    ep.seed = in.u64();
    ep.config_hash = in.u64();
    ep.hazard_id = in.i32();
    const uint16_t steps = in.u16();
    const uint16_t object_count = in.u16();
    const uint16_t connected_count = in.u16();
    in.u16();
    ep.ego_cruise = in.f64();
    const uint16_t route_count = in.u16();
    for (uint16_t i = 0; i < route_count; ++i) {
        ep.ego_route.push_back({in.f64(), in.f64(), in.f64()});
    }
    for (uint16_t i = 0; i < object_count; ++i) {
        ObjectMeta o;
        o.id = in.i32();
        o.kind = static_cast<ObjectKind>(in.u8());
        o.half_extent = in.f64();
        ep.objects.push_back(o);
    }
    for (uint16_t i = 0; i < connected_count; ++i) ep.connected.push_back(in.i32());

    ep.frames.assign(connected_count, {});
    for (uint16_t step = 0; step < steps; ++step) {
        ep.expert_actions.push_back(static_cast<Action>(in.u8()));
        std::vector<ObjectState> states;
        states.reserve(object_count);
        for (uint16_t o = 0; o < object_count; ++o) {
            ObjectState s;
            s.position = {in.f64(), in.f64(), 0.0};
            s.velocity = {in.f64(), in.f64(), 0.0};
            s.heading = in.f64();
            states.push_back(s);
        }
        ep.world.push_back(std::move(states));
        for (uint16_t v = 0; v < connected_count; ++v) {
            Frame f;
            f.vehicle_id = ep.connected[v];
            f.t_ds = step;
            const uint16_t count = in.u16();
            for (uint16_t d = 0; d < count; ++d) {
                Detection det;
                det.track_id = in.i32();
                det.position = {in.f64(), in.f64(), in.f64()};
                f.detections.push_back(det);
            }
            ep.frames[v].push_back(std::move(f));
        }
    }
    if (!in.done()) throw DecodeError("trailing bytes after the last step", in.offset());
    return ep;
}

inline void save_episode(const std::string& path, const Episode& ep) {
    const std::vector<uint8_t> bytes = serialize_episode(ep);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open episode file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Episode load_episode(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open episode file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_episode(bytes);
}

/// Debug-oriented text dump of a trial.
inline std::string episode_to_text(const Episode& ep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "scenario " << to_string(ep.scenario) << " seed " << ep.seed << " command "
       << to_string(ep.command) << " steps " << ep.steps() << "\n";
    os << "objects:";
    for (const ObjectMeta& o : ep.objects) {
        os << " " << o.id << ":kind=" << static_cast<int>(o.kind) << ",r=" << o.half_extent;
    }
    os << "\nconnected:";
    for (int32_t id : ep.connected) os << " " << id;
    os << "\n";
    for (int32_t step = 0; step < ep.steps(); ++step) {
        os << "t=" << step << " action="
           << (ep.expert_actions[static_cast<size_t>(step)] == Action::brake ? "brake" : "go");
        for (size_t o = 0; o < ep.objects.size(); ++o) {
            const ObjectState& s = ep.world[static_cast<size_t>(step)][o];
            os << " | " << ep.objects[o].id << "@(" << s.position.x << "," << s.position.y << ")";
        }
        os << "\n";
        for (size_t v = 0; v < ep.connected.size(); ++v) {
            const Frame& f = ep.frames[v][static_cast<size_t>(step)];
            os << "  veh " << ep.connected[v] << " sees";
            for (const Detection& d : f.detections) {
                os << " #" << d.track_id << "(" << d.position.x << "," << d.position.y << ")";
            }
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace coopdrive
