#pragma once
// Invariant suite binding all routes together. The default tier runs the
// quadrature-level identities; the extended tier adds the Monte Carlo
// agreement and smeared-delta checks.

#include <complex>
#include <string>
#include <vector>

#include "decoh/core.hpp"
#include "decoh/scattering.hpp"

namespace decoh {

enum class CheckTier { Default, Extended };

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<CheckResult> run_selfcheck(CheckTier tier);

// Brute-force oracle for the reduced collision integral: the energy delta in
// the unreduced 9-D form is replaced by a Gaussian of width s and the
// remaining 6-D integral is done by Monte Carlo. As s -> 0 this approaches
// the reduced 5-D quadrature (even-order corrections in s).
struct SmearedDeltaPoint {
  double s;
  std::complex<double> value;
  double stderr_;
};

SmearedDeltaPoint i2_smeared_oracle(const AmplitudeModel& model, const AmplitudeContext& ctx,
                                    const Vec3& r_o, const Vec3& p_o, double b, const Vec3& R,
                                    double s, int samples, std::uint64_t seed);

}  // namespace decoh
