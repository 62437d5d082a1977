#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopdrive/bytes.hpp"
#include "coopdrive/core.hpp"
#include "coopdrive/rng.hpp"

// Compact wire format for one vehicle's tracked observation window, plus a
// V2V channel model with bandwidth, package-size and loss constraints.
//
// Packet layout v1, little-endian, no padding:
//   header (22 bytes):
//     u8   format version (= 1)
//     u16  vehicle id
//     u8   frame count (<= 15)
//     u32  base timestamp, deciseconds
//     i32  pose x, centimeters        } sender pose at window end;
//     i32  pose y, centimeters        } detections are expressed in this
//     i32  pose z, centimeters        } anchor frame
//     u16  pose yaw, turns * 65536
//   per frame:
//     u8   timestamp offset from base, deciseconds
//     u16  detection count
//     per detection: u16 track id, i16 x, i16 y, i16 z (centimeters)
//
// Only detections and track ids travel: spatial edges are complete within a
// frame and temporal edges follow from track ids, so the receiver rebuilds
// the sender's graph without any O(m^2) edge payload. Positions quantize to
// 1 cm (half-quantum round-trip error 0.005 m per axis); timestamps are
// exact on the decisecond grid.

namespace coopdrive {

inline constexpr uint8_t kWireFormatVersion = 1;
inline constexpr size_t kWireHeaderBytes = 22;
inline constexpr size_t kWireFrameBytes = 3;
inline constexpr size_t kWireDetectionBytes = 8;
inline constexpr int kWireMaxFrames = 15;
inline constexpr double kYawQuantum = 2.0 * kPi / 65536.0;

class EncodeError : public std::runtime_error {
  public:
    explicit EncodeError(const std::string& msg) : std::runtime_error(msg) {}
};

class BudgetExceededError : public std::runtime_error {
  public:
    BudgetExceededError(size_t size, size_t budget)
        : std::runtime_error("packet of " + std::to_string(size) +
                             " bytes exceeds channel package budget of " +
                             std::to_string(budget) + " bytes") {}
};

struct ObservationWindow {
    int32_t vehicle_id = 0;
    Pose pose;  // sender pose at window end; frame positions are in this frame
    std::vector<Frame> frames;
};

/// Closed-form encoded size for the given per-frame detection counts.
inline size_t packet_size(std::span<const size_t> detection_counts) {
    size_t n = kWireHeaderBytes;
    for (size_t c : detection_counts) n += kWireFrameBytes + kWireDetectionBytes * c;
    return n;
}

namespace detail {

inline int16_t to_cm_i16(double meters, const char* axis) {
    const double cm = std::round(meters * 100.0);
    if (!(cm >= -32768.0 && cm <= 32767.0)) {
        throw EncodeError(std::string("position out of +-327.67 m range on axis ") + axis);
    }
    return static_cast<int16_t>(cm);
}

inline int32_t to_cm_i32(double meters) {
    return static_cast<int32_t>(std::llround(meters * 100.0));
}

inline uint16_t to_yaw_u16(double yaw) {
    double turns = normalize_angle(yaw) / (2.0 * kPi);
    if (turns < 0.0) turns += 1.0;
    const auto q = static_cast<int64_t>(std::llround(turns * 65536.0));
    return static_cast<uint16_t>(q & 0xffff);
}

}  // namespace detail

inline std::vector<uint8_t> encode_window(const ObservationWindow& w) {
    if (w.frames.size() > kWireMaxFrames) {
        throw EncodeError("window has more than 15 frames");
    }
    const int32_t base_ds = w.frames.empty() ? 0 : w.frames.front().t_ds;
    if (base_ds < 0) throw EncodeError("negative timestamp");

    ByteWriter out;
    out.u8(kWireFormatVersion);
    out.u16(static_cast<uint16_t>(w.vehicle_id));
    out.u8(static_cast<uint8_t>(w.frames.size()));
    out.u32(static_cast<uint32_t>(base_ds));
    out.i32(detail::to_cm_i32(w.pose.position.x));
    out.i32(detail::to_cm_i32(w.pose.position.y));
    out.i32(detail::to_cm_i32(w.pose.position.z));
    out.u16(detail::to_yaw_u16(w.pose.yaw));

    int32_t prev_ds = base_ds - 1;
    for (const Frame& f : w.frames) {
        const int32_t dt = f.t_ds - base_ds;
        if (f.t_ds <= prev_ds) throw EncodeError("frame timestamps must be strictly increasing");
        if (dt < 0 || dt > 255) throw EncodeError("frame offset does not fit the window");
        if (f.detections.size() > 65535) throw EncodeError("too many detections in one frame");
        prev_ds = f.t_ds;
        out.u8(static_cast<uint8_t>(dt));
        out.u16(static_cast<uint16_t>(f.detections.size()));
        for (const Detection& d : f.detections) {
            out.u16(static_cast<uint16_t>(d.track_id));
            out.i16(detail::to_cm_i16(d.position.x, "x"));
            out.i16(detail::to_cm_i16(d.position.y, "y"));
            out.i16(detail::to_cm_i16(d.position.z, "z"));
        }
    }
    return out.take();
}

inline ObservationWindow decode_window(std::span<const uint8_t> bytes) {
    ByteReader in(bytes.data(), bytes.size());
    in.require(kWireHeaderBytes, "packet header");

    const uint8_t version = in.u8();
    if (version != kWireFormatVersion) {
        throw DecodeError("unsupported wire format version " + std::to_string(version), 0);
    }
    ObservationWindow w;
    w.vehicle_id = in.u16();
    const uint8_t frame_count = in.u8();
    if (frame_count > kWireMaxFrames) {
        throw DecodeError("frame count exceeds the 15-frame window", 3);
    }
    const auto base_ds = static_cast<int32_t>(in.u32());
    w.pose.position = {in.i32() * 0.01, in.i32() * 0.01, in.i32() * 0.01};
    w.pose.yaw = normalize_angle(in.u16() * kYawQuantum);

    int32_t prev_ds = base_ds - 1;
    for (int f = 0; f < frame_count; ++f) {
        in.require(kWireFrameBytes, "frame header");
        Frame frame;
        frame.vehicle_id = w.vehicle_id;
        frame.t_ds = base_ds + in.u8();
        if (frame.t_ds <= prev_ds) {
            throw DecodeError("frame timestamps not strictly increasing", in.offset() - 1);
        }
        prev_ds = frame.t_ds;
        const uint16_t count = in.u16();
        in.require(static_cast<size_t>(count) * kWireDetectionBytes, "detections");
        frame.detections.reserve(count);
        for (uint16_t d = 0; d < count; ++d) {
            Detection det;
            det.track_id = in.u16();
            det.position = {in.i16() * 0.01, in.i16() * 0.01, in.i16() * 0.01};
            frame.detections.push_back(det);
        }
        w.frames.push_back(std::move(frame));
    }
    if (!in.done()) {
        throw DecodeError("trailing bytes after the last frame", in.offset());
    }
    return w;
}

inline size_t measure_ps(std::span<const uint8_t> packet) { return packet.size(); }

// V2V channel presets. Loss is whole-packet; latency is the serialization
// delay at the configured bandwidth.
struct ChannelConfig {
    std::string name = "DSRC";
    double bandwidth_bps = 2.0e6;
    size_t max_package_bytes = 200'000;
    double loss_probability = 0.05;

    static ChannelConfig dsrc(double loss = 0.05) { return {"DSRC", 2.0e6, 200'000, loss}; }
    static ChannelConfig cv2x(double loss = 0.05) { return {"C-V2X", 7.2e6, 720'000, loss}; }

    static ChannelConfig preset(std::string_view name, double loss = 0.05) {
        if (name == "DSRC" || name == "dsrc") return dsrc(loss);
        if (name == "C-V2X" || name == "cv2x" || name == "c-v2x") return cv2x(loss);
        throw ConfigError("unknown channel preset: " + std::string(name));
    }
};

struct TransmitResult {
    bool delivered = false;
    double latency_s = 0.0;
};

/// Sends one packet over the channel. Oversize packets are rejected outright:
/// they signal a representation that does not fit the communication budget.
inline TransmitResult transmit(std::span<const uint8_t> packet, const ChannelConfig& channel,
                               RngStream& rng) {
    if (packet.size() > channel.max_package_bytes) {
        throw BudgetExceededError(packet.size(), channel.max_package_bytes);
    }
    TransmitResult r;
    r.latency_s = static_cast<double>(packet.size()) * 8.0 / channel.bandwidth_bps;
    r.delivered = !rng.bernoulli(channel.loss_probability);
    return r;
}

}  // namespace coopdrive
