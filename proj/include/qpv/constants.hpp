#pragma once

// Numerical tolerances used across the library. Double precision with 4x4
// matrices leaves a wide margin, so these are deliberately tight.
namespace qpv::tol {

inline constexpr double hermiticity = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double psd = 1e-10;
inline constexpr double povm_completeness = 1e-10;

}  // namespace qpv::tol
