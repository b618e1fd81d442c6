#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace inline_snspd {

// Integer picoseconds are the time base of every tag stream.
using Picoseconds = std::int64_t;

inline constexpr double ps_per_s = 1e12;
inline constexpr double ps_per_ns = 1e3;
inline constexpr double um_per_cm = 1e4;

// FWHM = 2*sqrt(2 ln 2) * sigma for a Gaussian.
inline const double fwhm_per_sigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);

inline double sigma_from_fwhm(double fwhm) { return fwhm / fwhm_per_sigma; }

inline Picoseconds seconds_to_ps(double s) { return static_cast<Picoseconds>(std::llround(s * ps_per_s)); }

}  // namespace inline_snspd
