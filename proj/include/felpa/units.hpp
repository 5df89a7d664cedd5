#pragma once

#include <cmath>

namespace felpa {

// dB / dBm live only at config boundaries; everything internal is linear mW.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// Sample sizes arrive in MB; decimal convention (1 MB = 1e6 bytes) by
// default, 2^20 bytes behind the config flag.
inline double mb_to_bits(double mb, bool binary_megabyte = false) {
  const double bytes = binary_megabyte ? 1048576.0 : 1e6;
  return mb * bytes * 8.0;
}

}  // namespace felpa
