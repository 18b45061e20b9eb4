#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace spf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double norm_sq(const Vec2& v) { return v.x * v.x + v.y * v.y; }
/// 90 degree counterclockwise rotation.
inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

enum class ErrorCode {
  invalid_resolution,
  invalid_weight,
  outside_domain,
  incompatible_rhs,
  solver_failure,
  mesh_mismatch,
  placement,
  size,
  config,
  geometry,
  unsupported,
};

/// Single exception type for the whole library; `code` selects the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spf
