#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace aderlts {

using Vec3 = std::array<double, 3>;

/// Number of elastic quantities: six stresses followed by three velocities.
inline constexpr int kElasticVars = 9;
/// Memory variables per relaxation mechanism.
inline constexpr int kAnelasticVarsPerMech = 6;
inline constexpr int kFacesPerTet = 4;

inline constexpr int num_quantities(int mechanisms) {
  return kElasticVars + kAnelasticVarsPerMech * mechanisms;
}

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidMaterialError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };
class MeshLoadError : public Error { using Error::Error; };
class TopologyError : public Error { using Error::Error; };
class AssemblyError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class SchedulingError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };
class MisfitError : public Error { using Error::Error; };

// Small vector helpers used by geometry code.
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace aderlts
