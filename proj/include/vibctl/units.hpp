#pragma once

// Atomic units internally (hbar = m_e = e = a0 = 1). Every conversion to and
// from laboratory units goes through this header.

#include <numbers>

namespace vibctl::units {

inline constexpr double pi = std::numbers::pi;

inline constexpr double hartree_to_cm1 = 219474.6313632;
inline constexpr double cm1_to_hartree = 1.0 / hartree_to_cm1;

inline constexpr double au_time_s = 2.4188843265857e-17;
inline constexpr double au_time_fs = au_time_s * 1e15;
inline constexpr double fs_to_au = 1.0 / au_time_fs;
inline constexpr double ps_to_au = 1000.0 * fs_to_au;

inline constexpr double au_field_v_per_m = 5.14220674763e11;
inline constexpr double amu_to_me = 1822.888486209;
inline constexpr double bohr_m = 5.29177210903e-11;

inline constexpr double speed_of_light = 299792458.0;        // m/s
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m


}  // namespace vibctl::units
