#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace roomgraph {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }

// Closed interval. lo > hi means empty.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static constexpr double kSlack = 1e-9;

  bool empty() const { return lo > hi + kSlack; }
  double length() const { return empty() ? 0.0 : std::max(0.0, hi - lo); }
  bool contains(double v, double tol = kSlack) const { return v >= lo - tol && v <= hi + tol; }
  Interval intersect(Interval o) const { return {std::max(lo, o.lo), std::min(hi, o.hi)}; }
  static Interval point(double v) { return {v, v}; }
  static Interval all() { return {-1e300, 1e300}; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Axis-aligned box in world coordinates.
struct Box3 {
  Vec3 min;
  Vec3 max;

  static Box3 centered(Vec3 center, Vec3 half) { return {center - half, center + half}; }
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  double volume() const {
    Vec3 e = extent();
    return std::max(0.0, e.x) * std::max(0.0, e.y) * std::max(0.0, e.z);
  }

  friend bool operator==(const Box3&, const Box3&) = default;
};

inline double overlap_length(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

inline double intersection_volume(const Box3& a, const Box3& b) {
  return overlap_length(a.min.x, a.max.x, b.min.x, b.max.x) *
         overlap_length(a.min.y, a.max.y, b.min.y, b.max.y) *
         overlap_length(a.min.z, a.max.z, b.min.z, b.max.z);
}

inline bool box_inside(const Box3& inner, const Box3& outer, double tol) {
  for (int a = 0; a < 3; ++a) {
    if (inner.min[a] < outer.min[a] - tol || inner.max[a] > outer.max[a] + tol) return false;
  }
  return true;
}

// Cardinal heading about +z, measured clockwise from north (+y).
enum class Rotation : int { k0 = 0, k90 = 90, k180 = 180, k270 = 270 };

inline int degrees(Rotation r) { return static_cast<int>(r); }

inline bool rotation_from_degrees(int deg, Rotation& out) {
  int d = ((deg % 360) + 360) % 360;
  switch (d) {
    case 0: out = Rotation::k0; return true;
    case 90: out = Rotation::k90; return true;
    case 180: out = Rotation::k180; return true;
    case 270: out = Rotation::k270; return true;
    default: return false;
  }
}

inline Rotation compose(Rotation a, int delta_deg) {
  Rotation r = Rotation::k0;
  rotation_from_degrees(degrees(a) + delta_deg, r);
  return r;
}

// Horizontal world directions.
enum class Heading { kPosX, kNegX, kPosY, kNegY };

inline int axis_of(Heading h) { return (h == Heading::kPosX || h == Heading::kNegX) ? 0 : 1; }
inline double sign_of(Heading h) { return (h == Heading::kPosX || h == Heading::kPosY) ? 1.0 : -1.0; }
inline Heading opposite(Heading h) {
  switch (h) {
    case Heading::kPosX: return Heading::kNegX;
    case Heading::kNegX: return Heading::kPosX;
    case Heading::kPosY: return Heading::kNegY;
    case Heading::kNegY: return Heading::kPosY;
  }
  return h;
}

// Object-local horizontal directions: +x is the object's right, +y its front.
enum class LocalDir { kRight, kLeft, kFront, kBack };

inline Heading forward_heading(Rotation r) {
  switch (r) {
    case Rotation::k0: return Heading::kPosY;
    case Rotation::k90: return Heading::kPosX;
    case Rotation::k180: return Heading::kNegY;
    case Rotation::k270: return Heading::kNegX;
  }
  return Heading::kPosY;
}

inline Heading right_heading(Rotation r) {
  switch (r) {
    case Rotation::k0: return Heading::kPosX;
    case Rotation::k90: return Heading::kNegY;
    case Rotation::k180: return Heading::kNegX;
    case Rotation::k270: return Heading::kPosY;
  }
  return Heading::kPosX;
}

inline Heading to_world(LocalDir d, Rotation r) {
  switch (d) {
    case LocalDir::kRight: return right_heading(r);
    case LocalDir::kLeft: return opposite(right_heading(r));
    case LocalDir::kFront: return forward_heading(r);
    case LocalDir::kBack: return opposite(forward_heading(r));
  }
  return Heading::kPosY;
}

inline LocalDir to_local(Heading h, Rotation r) {
  for (LocalDir d : {LocalDir::kRight, LocalDir::kLeft, LocalDir::kFront, LocalDir::kBack}) {
    if (to_world(d, r) == h) return d;
  }
  return LocalDir::kFront;
}

inline bool swaps_axes(Rotation r) { return r == Rotation::k90 || r == Rotation::k270; }

// World-frame half extents of a box with local size (sx, sy, sz).
inline Vec3 world_half_extents(Vec3 size, Rotation r) {
  return swaps_axes(r) ? Vec3{size.y / 2, size.x / 2, size.z / 2}
                       : Vec3{size.x / 2, size.y / 2, size.z / 2};
}

// Four horizontal clearances measured from a center. Index by Heading or by
// LocalDir depending on the frame the caller works in.
struct Extents4 {
  double x_neg = 0.0;
  double x_pos = 0.0;
  double y_neg = 0.0;
  double y_pos = 0.0;

  double& at(Heading h) {
    switch (h) {
      case Heading::kPosX: return x_pos;
      case Heading::kNegX: return x_neg;
      case Heading::kPosY: return y_pos;
      case Heading::kNegY: return y_neg;
    }
    return x_pos;
  }
  double at(Heading h) const { return const_cast<Extents4*>(this)->at(h); }

  friend bool operator==(const Extents4&, const Extents4&) = default;
};

// Local extents (x = right, y = front) expressed in world headings.
inline Extents4 local_extents_to_world(const Extents4& local, Rotation r) {
  Extents4 w;
  w.at(to_world(LocalDir::kRight, r)) = local.x_pos;
  w.at(to_world(LocalDir::kLeft, r)) = local.x_neg;
  w.at(to_world(LocalDir::kFront, r)) = local.y_pos;
  w.at(to_world(LocalDir::kBack, r)) = local.y_neg;
  return w;
}

inline Extents4 world_extents_to_local(const Extents4& world, Rotation r) {
  Extents4 l;
  l.x_pos = world.at(to_world(LocalDir::kRight, r));
  l.x_neg = world.at(to_world(LocalDir::kLeft, r));
  l.y_pos = world.at(to_world(LocalDir::kFront, r));
  l.y_neg = world.at(to_world(LocalDir::kBack, r));
  return l;
}

}  // namespace roomgraph
