#include "bcdrive/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "bcdrive/errors.hpp"
#include "bcdrive/rng.hpp"

namespace bcdrive {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kTrackSamples = 256;

struct Projection {
  std::size_t segment = 0;
  double t = 0.0;        // position along the segment in [0,1]
  double dist2 = 0.0;
  double side = 0.0;     // cross product sign source
};

inline Projection project_onto(const Vec2& a, const Vec2& b, const Vec2& p) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = a.x + t * dx - p.x;
  const double qy = a.y + t * dy - p.y;
  return {0, t, qx * qx + qy * qy, dx * (p.y - a.y) - dy * (p.x - a.x)};
}

}  // namespace

SteerClass steer_from_int(int value) {
  if (value < -1 || value > 1) {
    throw ContractError("steer class must be -1, 0 or 1, got " + std::to_string(value));
  }
  return static_cast<SteerClass>(value);
}

double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// ---------------------------------------------------------------------------
// Track
// ---------------------------------------------------------------------------

Track::Track(std::vector<Vec2> centerline, double width)
    : points_(std::move(centerline)), width_(width) {
  if (points_.size() < 8) throw ContractError("track needs at least 8 centerline points");
  if (!(width_ > 0.0)) throw ContractError("track width must be positive");
  cumulative_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Vec2& a = points_[i];
    const Vec2& b = points_[(i + 1) % points_.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) {
      throw ContractError("track points " + std::to_string(i) + " and " +
                          std::to_string((i + 1) % points_.size()) + " coincide");
    }
    cumulative_[i] = total_length_;
    total_length_ += len;
  }
}

Track make_default_track() {
  constexpr double half_straight = 4.0;
  constexpr double radius = 3.0;
  const double arc = kPi * radius;
  const double total = 4.0 * half_straight + 2.0 * arc;

  // Arc length 0 is the middle of the bottom straight, driving +x (counterclockwise).
  auto point_at = [&](double s) -> Vec2 {
    if (s < half_straight) return {s, -radius};
    s -= half_straight;
    if (s < arc) {
      const double a = -kPi / 2.0 + s / radius;
      return {half_straight + radius * std::cos(a), radius * std::sin(a)};
    }
    s -= arc;
    if (s < 2.0 * half_straight) return {half_straight - s, radius};
    s -= 2.0 * half_straight;
    if (s < arc) {
      const double a = kPi / 2.0 + s / radius;
      return {-half_straight + radius * std::cos(a), radius * std::sin(a)};
    }
    s -= arc;
    return {-half_straight + s, -radius};
  };

  std::vector<Vec2> pts;
  pts.reserve(kTrackSamples);
  for (std::size_t k = 0; k < kTrackSamples; ++k) {
    pts.push_back(point_at(total * static_cast<double>(k) / kTrackSamples));
  }
  return Track(std::move(pts), 1.0);
}

Track make_random_track(std::uint64_t seed) {
  // r(theta) = 5 + sum_{h=2..4} a_h sin(h theta + phi_h), a_h in [0, 0.8].
  // r stays within [2.6, 7.4] > 0, so the polar curve is star-shaped and simple.
  Rng rng(mix_seed(seed, 0x7a11));
  std::array<double, 3> amp{};
  std::array<double, 3> phase{};
  for (std::size_t h = 0; h < 3; ++h) {
    amp[h] = rng.uniform(0.0, 0.8);
    phase[h] = rng.uniform(0.0, 2.0 * kPi);
  }
  std::vector<Vec2> pts;
  pts.reserve(kTrackSamples);
  for (std::size_t k = 0; k < kTrackSamples; ++k) {
    const double theta = 2.0 * kPi * static_cast<double>(k) / kTrackSamples;
    double r = 5.0;
    for (std::size_t h = 0; h < 3; ++h) {
      r += amp[h] * std::sin(static_cast<double>(h + 2) * theta + phase[h]);
    }
    pts.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return Track(std::move(pts), 1.0);
}

Track track_from_name(const std::string& name) {
  if (name == "default") return make_default_track();
  const std::string prefix = "random:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string digits = name.substr(prefix.size());
    std::size_t used = 0;
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != digits.size()) {
      throw ContractError("bad random track seed in '" + name + "'");
    }
    return make_random_track(seed);
  }
  throw ContractError("unknown track '" + name + "' (expected default or random:<seed>)");
}

TrackFrame track_frame(const Track& track, Vec2 p) {
  const auto& pts = track.centerline();
  const std::size_t n = pts.size();
  Projection best;
  best.dist2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Projection pr = project_onto(pts[i], pts[(i + 1) % n], p);
    if (pr.dist2 < best.dist2) {
      best = pr;
      best.segment = i;
    }
  }
  const Vec2& a = pts[best.segment];
  const Vec2& b = pts[(best.segment + 1) % n];
  const double seg_len = std::hypot(b.x - a.x, b.y - a.y);

  TrackFrame f;
  const double dist = std::sqrt(best.dist2);
  f.cross_track_error = best.side >= 0.0 ? dist : -dist;
  f.tangent_heading = std::atan2(b.y - a.y, b.x - a.x);
  double arc = track.arc_at(best.segment) + best.t * seg_len;
  if (arc >= track.total_length()) arc -= track.total_length();
  f.arc_position = arc < 0.0 ? 0.0 : arc;
  return f;
}

CarState start_state(const Track& track, double lateral_offset, double speed) {
  const auto& pts = track.centerline();
  const Vec2 a = pts[0];
  const Vec2 b = pts[1];
  const double heading = std::atan2(b.y - a.y, b.x - a.x);
  CarState s;
  s.x = a.x - lateral_offset * std::sin(heading);
  s.y = a.y + lateral_offset * std::cos(heading);
  s.heading = wrap_angle(heading);
  s.speed = speed;
  return s;
}

CarState car_step(const CarState& state, SteerClass cmd, double dt, double turn_rate) {
  if (!(dt > 0.0)) throw ContractError("car_step: dt must be positive");
  CarState next = state;
  next.heading = wrap_angle(state.heading - static_cast<double>(to_int(cmd)) * turn_rate * dt);
  next.x = state.x + state.speed * dt * std::cos(next.heading);
  next.y = state.y + state.speed * dt * std::sin(next.heading);
  return next;
}

void CameraSpec::validate() const {
  if (resolution < 16 || resolution % 2 != 0) {
    throw ContractError("camera resolution must be even and >= 16");
  }
  if (!(window_side > 0.0)) throw ContractError("camera window_side must be positive");
  if (!(near_offset >= 0.0)) throw ContractError("camera near_offset must be >= 0");
}

Frame render_camera(const Track& track, const CarState& state, const CameraSpec& spec) {
  spec.validate();
  const auto res = static_cast<std::size_t>(spec.resolution);
  Frame frame({1, res, res});

  const double fx = std::cos(state.heading);
  const double fy = std::sin(state.heading);
  const double lx = -fy;
  const double ly = fx;
  const double pixel = spec.window_side / static_cast<double>(res);
  const double half_width = track.width() / 2.0;

  // Only segments that can come within half_width of the window matter: any
  // pixel whose nearest segment is excluded is farther than half_width from the
  // whole track and renders as background under either search.
  const double center_f = spec.near_offset + spec.window_side / 2.0;
  const Vec2 center{state.x + center_f * fx, state.y + center_f * fy};
  const double reach = spec.window_side * std::numbers::sqrt2 / 2.0 + half_width;
  const auto& pts = track.centerline();
  const std::size_t n = pts.size();
  std::vector<std::size_t> near_segments;
  for (std::size_t i = 0; i < n; ++i) {
    const Projection pr = project_onto(pts[i], pts[(i + 1) % n], center);
    if (pr.dist2 <= reach * reach) near_segments.push_back(i);
  }
  if (near_segments.empty()) return frame;

  const double band2 = kCenterlineBand * kCenterlineBand;
  const double road2 = half_width * half_width;
  for (std::size_t row = 0; row < res; ++row) {
    const double f = spec.near_offset + (static_cast<double>(res - row) - 0.5) * pixel;
    for (std::size_t col = 0; col < res; ++col) {
      const double l = spec.window_side / 2.0 - (static_cast<double>(col) + 0.5) * pixel;
      const Vec2 p{state.x + f * fx + l * lx, state.y + f * fy + l * ly};
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i : near_segments) {
        best = std::min(best, project_onto(pts[i], pts[(i + 1) % n], p).dist2);
      }
      double v = 0.0;
      if (best <= band2) {
        v = kLineIntensity;
      } else if (best <= road2) {
        v = kRoadIntensity;
      }
      frame.at(0, row, col) = v;
    }
  }
  return frame;
}

double expert_score(const Track& track, const CarState& state, const ExpertGains& gains) {
  const TrackFrame tf = track_frame(track, {state.x, state.y});
  const double heading_error = wrap_angle(state.heading - tf.tangent_heading);
  return gains.k_offset * tf.cross_track_error + gains.k_heading * heading_error;
}

SteerClass expert_policy(const Track& track, const CarState& state, const ExpertGains& gains) {
  const double s = expert_score(track, state, gains);
  if (s > gains.deadband) return SteerClass::Right;
  if (s < -gains.deadband) return SteerClass::Left;
  return SteerClass::Straight;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_track(const Track& track, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write track " + path.string());
  os << std::fixed << std::setprecision(6);
  os << "width " << track.width() << '\n';
  for (const Vec2& p : track.centerline()) os << p.x << ' ' << p.y << '\n';
  // The first point is repeated to close the course explicitly.
  os << track.centerline().front().x << ' ' << track.centerline().front().y << '\n';
  if (!os) throw IoError("failed writing track " + path.string());
}

Track load_track(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open track " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": empty track file");
  double width = 0.0;
  {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key >> width) || key != "width") {
      throw FormatError(path.string() + ":1: expected 'width <w>'");
    }
  }
  std::vector<Vec2> pts;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Vec2 p;
    std::string extra;
    if (!(ls >> p.x >> p.y) || (ls >> extra)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 'x y'");
    }
    pts.push_back(p);
  }
  if (pts.size() < 2) throw FormatError(path.string() + ": too few points");
  const Vec2 first = pts.front();
  const Vec2 last = pts.back();
  if (std::abs(first.x - last.x) > 1e-6 || std::abs(first.y - last.y) > 1e-6) {
    throw FormatError(path.string() + ": track is not closed (last point must repeat the first)");
  }
  pts.pop_back();
  try {
    return Track(std::move(pts), width);
  } catch (const ContractError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace bcdrive
