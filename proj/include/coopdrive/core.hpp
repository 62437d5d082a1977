#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Core value types shared by the simulator, graph, codec and network layers.
// Timestamps are carried as integer deciseconds (the 10 Hz sensing grid) so
// that equality and file round-trips are exact; convert to seconds only where
// a physical quantity is needed.

namespace coopdrive {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTickSeconds = 0.1;  // 10 Hz sensing grid

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double norm2d() const { return std::hypot(x, y); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

// Planar rigid pose (z passthrough). Maps body-frame points into the world.
struct Pose {
    Vec3 position;
    double yaw = 0.0;  // radians, (-pi, pi]

    Vec3 to_world(const Vec3& body) const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        return {position.x + c * body.x - s * body.y,
                position.y + s * body.x + c * body.y,
                position.z + body.z};
    }

    Vec3 to_body(const Vec3& world) const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        const Vec3 d = world - position;
        return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
    }
};

enum class ObjectKind : uint8_t { ego = 0, collaborator = 1, traffic = 2, obstacle = 3 };

enum class Command : uint8_t {
    lane_follow = 0,
    turn_right = 1,
    turn_left = 2,
    go_straight = 3,
    change_left = 4,
    change_right = 5,
};
inline constexpr int kCommandCount = 6;

enum class Action : uint8_t { go = 0, brake = 1 };

enum class ScenarioId : uint8_t { overtaking = 0, left_turn = 1, street_crossing = 2 };

inline std::string to_string(ScenarioId s) {
    switch (s) {
        case ScenarioId::overtaking: return "overtaking";
        case ScenarioId::left_turn: return "left_turn";
        case ScenarioId::street_crossing: return "street_crossing";
    }
    return "unknown";
}

inline std::string to_string(Command c) {
    switch (c) {
        case Command::lane_follow: return "lane_follow";
        case Command::turn_right: return "turn_right";
        case Command::turn_left: return "turn_left";
        case Command::go_straight: return "go_straight";
        case Command::change_left: return "change_left";
        case Command::change_right: return "change_right";
    }
    return "unknown";
}

inline ScenarioId scenario_from_string(std::string_view s) {
    if (s == "overtaking") return ScenarioId::overtaking;
    if (s == "left_turn") return ScenarioId::left_turn;
    if (s == "street_crossing") return ScenarioId::street_crossing;
    throw std::invalid_argument("unknown scenario: " + std::string(s));
}

// One timestamped detection set from a single vehicle. Positions are in the
// frame the producing stage defined (sensor frame at capture time for raw
// observations; a window anchor frame once motion-compensated).
struct Detection {
    int32_t track_id = -1;  // -1 until the tracker has run
    Vec3 position;
};

struct Frame {
    int32_t vehicle_id = 0;
    int32_t t_ds = 0;  // timestamp in deciseconds
    std::vector<Detection> detections;

    double timestamp() const { return static_cast<double>(t_ds) * kTickSeconds; }
};

struct WorldObject {
    int32_t id = 0;
    ObjectKind kind = ObjectKind::traffic;
    Vec3 position;   // z = 0 for ground objects
    Vec3 velocity;   // m/s
    double heading = 0.0;
    double half_extent = 1.0;  // bounding disc radius, used by the occlusion test

    Pose pose() const { return Pose{position, heading}; }
};

// Error taxonomy: configuration problems (bad flags, bad enums, shape
// mismatches) vs data problems encountered at runtime.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DecodeError : public std::runtime_error {
  public:
    DecodeError(const std::string& msg, size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    size_t offset() const { return offset_; }

  private:
    size_t offset_;
};

// FNV-1a, used for config and artifact content hashes.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

}  // namespace coopdrive
