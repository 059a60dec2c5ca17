// Copyright 2026 The chainplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINPLAN__GEOMETRY_HPP_
#define CHAINPLAN__GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace chainplan
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double angle)
{
  double r = std::remainder(angle, kTwoPi);
  if (r <= -kPi) {
    r += kTwoPi;
  }
  return r;
}

/// Interpolates between two headings along the shorter arc.
inline double interpolate_angle(double from, double to, double fraction)
{
  return wrap_angle(from + fraction * wrap_angle(to - from));
}

struct Vec2
{
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2 &, const Vec2 &) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

inline Vec2 rotate(Vec2 v, double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) {
    return distance(p, a);
  }
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

/// Rectangle of (length, width) centered at `center`, long axis along `heading`.
struct OrientedBox
{
  Vec2 center;
  double heading{0.0};
  double length{0.0};
  double width{0.0};

  std::array<Vec2, 4> corners() const
  {
    const double hl = 0.5 * length;
    const double hw = 0.5 * width;
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    auto at = [&](double lon, double lat) {
      return Vec2{center.x + c * lon - s * lat, center.y + s * lon + c * lat};
    };
    return {at(hl, hw), at(-hl, hw), at(-hl, -hw), at(hl, -hw)};
  }
};

namespace detail
{

inline bool separated_on_axes(const std::array<Vec2, 4> & a, const std::array<Vec2, 4> & b)
{
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 edge = a[(i + 1) % 4] - a[i];
    const Vec2 axis{-edge.y, edge.x};
    double amin = std::numeric_limits<double>::infinity();
    double amax = -amin;
    double bmin = amin;
    double bmax = -amin;
    for (const auto & p : a) {
      const double d = dot(p, axis);
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    for (const auto & p : b) {
      const double d = dot(p, axis);
      bmin = std::min(bmin, d);
      bmax = std::max(bmax, d);
    }
    // touching boxes are not overlapping
    if (amax <= bmin || bmax <= amin) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// True when the interiors of the two rectangles intersect.
inline bool boxes_overlap(const OrientedBox & a, const OrientedBox & b)
{
  const auto ca = a.corners();
  const auto cb = b.corners();
  return !detail::separated_on_axes(ca, cb) && !detail::separated_on_axes(cb, ca);
}

/// Clearance between two rectangles; zero when they touch or overlap.
inline double box_distance(const OrientedBox & a, const OrientedBox & b)
{
  if (boxes_overlap(a, b)) {
    return 0.0;
  }
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

/// Position of a point relative to a polyline: arclength, signed lateral
/// offset (positive to the left) and the tangent heading at the foot point.
struct Projection
{
  double s{0.0};
  double lateral{0.0};
  double heading{0.0};
};

struct PathPoint
{
  Vec2 position;
  double heading{0.0};
};

/// Polyline with cumulative arclength. Queries outside [0, length] extrapolate
/// straight along the first or last segment.
class Polyline
{
public:
  Polyline() = default;

  explicit Polyline(std::vector<Vec2> points) : points_(std::move(points))
  {
    if (points_.size() < 2) {
      throw std::invalid_argument("polyline needs at least two points");
    }
    arclength_.resize(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double d = distance(points_[i], points_[i - 1]);
      if (d == 0.0) {
        throw std::invalid_argument("polyline has repeated consecutive points");
      }
      arclength_[i] = arclength_[i - 1] + d;
    }
  }

  std::span<const Vec2> points() const { return points_; }
  std::span<const double> arclengths() const { return arclength_; }
  double length() const { return arclength_.empty() ? 0.0 : arclength_.back(); }
  bool empty() const { return points_.empty(); }

  double segment_heading(std::size_t i) const
  {
    const Vec2 d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
  }

  PathPoint at(double s) const
  {
    const std::size_t i = segment_index(s);
    const double seg_len = arclength_[i + 1] - arclength_[i];
    const double t = (s - arclength_[i]) / seg_len;
    const Vec2 p = points_[i] + t * (points_[i + 1] - points_[i]);
    return {p, segment_heading(i)};
  }

  Projection project(Vec2 p) const
  {
    double best_d2 = std::numeric_limits<double>::infinity();
    Projection best;
    const std::size_t n = points_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Vec2 a = points_[i];
      const Vec2 ab = points_[i + 1] - a;
      const double len2 = dot(ab, ab);
      double t = dot(p - a, ab) / len2;
      // only the end segments extend past their outer vertex
      const double lo = (i == 0) ? -std::numeric_limits<double>::infinity() : 0.0;
      const double hi = (i + 2 == n) ? std::numeric_limits<double>::infinity() : 1.0;
      t = std::clamp(t, lo, hi);
      const Vec2 foot = a + t * ab;
      const Vec2 off = p - foot;
      const double d2 = dot(off, off);
      if (d2 < best_d2) {
        best_d2 = d2;
        const double len = std::sqrt(len2);
        best.s = arclength_[i] + t * len;
        best.lateral = cross(ab, p - a) / len;
        best.heading = std::atan2(ab.y, ab.x);
      }
    }
    return best;
  }

  /// Heading change per meter between consecutive segments, one entry per
  /// interior vertex, paired with the vertex arclength.
  std::vector<std::pair<double, double>> vertex_curvatures() const
  {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 1; i + 1 < points_.size(); ++i) {
      const double turn = wrap_angle(segment_heading(i) - segment_heading(i - 1));
      const double span = 0.5 * (arclength_[i + 1] - arclength_[i - 1]);
      out.emplace_back(arclength_[i], turn / span);
    }
    return out;
  }

private:
  std::size_t segment_index(double s) const
  {
    const auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
    std::size_t i = (it == arclength_.begin()) ? 0 : static_cast<std::size_t>(it - arclength_.begin()) - 1;
    return std::min(i, points_.size() - 2);
  }

  std::vector<Vec2> points_;
  std::vector<double> arclength_;
};

}  // namespace chainplan

#endif  // CHAINPLAN__GEOMETRY_HPP_
