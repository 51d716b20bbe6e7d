#pragma once
// Shared domain types: unit system, 3-vectors, bath specification, and the
// epsilon prefactor convention. All downstream modules work in whatever units
// the caller supplies; the defaults hbar = k_B = 1 keep exponents sane.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace decoh {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad physical input (non-positive mass, zero-magnitude momentum, ...).
struct ValidationError : Error {
  using Error::Error;
};

// A quadrature failed to reach its requested tolerance.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& msg, double achieved)
      : Error(msg), achieved_tol(achieved) {}
  double achieved_tol;
};

// Operation called outside its validity regime (e.g. strong-condition
// formula at large separation, Gbar at q = 0, degenerate sigma = 0 model).
struct DomainError : Error {
  using Error::Error;
};

// A callable handed to us violates its stated contract.
struct ContractError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& msg, int line_no = 0)
      : Error(msg), line(line_no) {}
  int line;
};

struct UnitSystem {
  double hbar = 1.0;
  double boltzmann = 1.0;
};

inline UnitSystem validated(const UnitSystem& u) {
  if (!(u.hbar > 0.0) || !std::isfinite(u.hbar))
    throw ValidationError("UnitSystem: hbar must be positive and finite");
  if (!(u.boltzmann > 0.0) || !std::isfinite(u.boltzmann))
    throw ValidationError("UnitSystem: boltzmann must be positive and finite");
  return u;
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  friend constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  constexpr double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  Vec3 normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw ValidationError("Vec3: cannot normalize zero or non-finite vector");
    return *this / n;
  }
};

// Prefactor convention of the localization rate. The corrected scattering
// treatment gives 1; the earlier Gallis-Fleming result carries an extra 2*pi.
enum class EpsilonMode { Corrected, GallisFleming };

inline double epsilon_multiplier(EpsilonMode m) {
  return m == EpsilonMode::Corrected ? 1.0 : 2.0 * std::numbers::pi;
}

inline const char* epsilon_name(EpsilonMode m) {
  return m == EpsilonMode::Corrected ? "corrected" : "gallis-fleming";
}

struct BathSpec {
  double mass = 1.0;         // bath particle mass m
  double temperature = 1.0;  // T
  double density = 0.0;      // number density n
  UnitSystem units;

  double beta = 1.0;          // 1 / (k_B T)
  double n_lambda3 = 0.0;     // diluteness indicator n * lambda^3
  bool degeneracy_flag = false;  // raised when n * lambda^3 >= 0.1

  double q_thermal() const { return std::sqrt(2.0 * mass / beta); }
};

// lambda = sqrt(2 pi hbar^2 beta / m)
inline double thermal_wavelength_of(double hbar, double beta, double mass) {
  return std::sqrt(2.0 * std::numbers::pi * hbar * hbar * beta / mass);
}

inline BathSpec make_bath(double mass, double temperature, double density,
                          const UnitSystem& units = {}) {
  validated(units);
  if (!std::isfinite(mass) || !std::isfinite(temperature) || !std::isfinite(density))
    throw ValidationError("make_bath: inputs must be finite");
  if (!(mass > 0.0)) throw ValidationError("make_bath: mass must be > 0");
  if (!(temperature > 0.0)) throw ValidationError("make_bath: temperature must be > 0");
  if (density < 0.0) throw ValidationError("make_bath: density must be >= 0");

  BathSpec b;
  b.mass = mass;
  b.temperature = temperature;
  b.density = density;
  b.units = units;
  b.beta = 1.0 / (units.boltzmann * temperature);
  const double lambda = thermal_wavelength_of(units.hbar, b.beta, mass);
  b.n_lambda3 = density * lambda * lambda * lambda;
  b.degeneracy_flag = b.n_lambda3 >= 0.1;
  return b;
}

}  // namespace decoh
