#pragma once

// Deterministic 2D world. Conventions used everywhere in the project:
//   * heading is counterclockwise-positive, wrapped to (-pi, pi];
//   * cross-track error is positive when the car is left of the track direction;
//   * SteerClass::Right (+1) turns clockwise, i.e. decreases heading.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bcdrive/tensor.hpp"

namespace bcdrive {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class SteerClass : int { Left = -1, Straight = 0, Right = 1 };

constexpr int to_int(SteerClass c) { return static_cast<int>(c); }
// Index 0..2 for left, straight, right.
constexpr std::size_t class_index(SteerClass c) { return static_cast<std::size_t>(to_int(c) + 1); }
constexpr SteerClass class_from_index(std::size_t i) { return static_cast<SteerClass>(static_cast<int>(i) - 1); }
constexpr SteerClass negate(SteerClass c) { return static_cast<SteerClass>(-to_int(c)); }
// Throws ContractError outside {-1, 0, 1}.
SteerClass steer_from_int(int value);

double wrap_angle(double radians);

/// Closed polyline course; the last point connects back to the first.
class Track {
 public:
  Track(std::vector<Vec2> centerline, double width);

  const std::vector<Vec2>& centerline() const noexcept { return points_; }
  double width() const noexcept { return width_; }
  double total_length() const noexcept { return total_length_; }
  std::size_t segment_count() const noexcept { return points_.size(); }
  // Arc length at the start of segment i.
  double arc_at(std::size_t i) const { return cumulative_[i]; }

  friend bool operator==(const Track& a, const Track& b) {
    return a.width_ == b.width_ && a.points_ == b.points_;
  }

 private:
  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
  double width_;
  double total_length_ = 0.0;
};

struct CarState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 1.0;

  friend bool operator==(const CarState&, const CarState&) = default;
};

struct CameraSpec {
  int resolution = 64;
  double near_offset = 0.0;
  double window_side = 2.56;

  void validate() const;
};

struct ExpertGains {
  double k_offset = 1.0;
  double k_heading = 2.0;
  double deadband = 0.15;
};

struct TrackFrame {
  double cross_track_error = 0.0;
  double tangent_heading = 0.0;
  double arc_position = 0.0;
};

inline constexpr double kDefaultTurnRate = 1.2;  // rad/s
inline constexpr double kDefaultDt = 0.05;       // s
inline constexpr double kCenterlineBand = 0.06;  // m

inline constexpr double kRoadIntensity = 128.0 / 255.0;
inline constexpr double kLineIntensity = 1.0;

// Stadium: 8 m straights, 3 m radius ends, 1 m wide, 256 points.
Track make_default_track();
// Perturbed 5 m circle; see the implementation for the harmonic bound.
Track make_random_track(std::uint64_t seed);

// Resolves "default" or "random:<seed>".
Track track_from_name(const std::string& name);

TrackFrame track_frame(const Track& track, Vec2 p);

// Car placed on the centerline at arc position 0, facing along the track,
// optionally shifted sideways (positive = left).
CarState start_state(const Track& track, double lateral_offset = 0.0, double speed = 1.0);

CarState car_step(const CarState& state, SteerClass cmd, double dt,
                  double turn_rate = kDefaultTurnRate);

Frame render_camera(const Track& track, const CarState& state, const CameraSpec& spec);

// Continuous steering score; positive means steer right.
double expert_score(const Track& track, const CarState& state, const ExpertGains& gains);
SteerClass expert_policy(const Track& track, const CarState& state, const ExpertGains& gains);

// Text format: "width <w>" then "x y" per line with 6 decimals.
void save_track(const Track& track, const std::filesystem::path& path);
Track load_track(const std::filesystem::path& path);

}  // namespace bcdrive
