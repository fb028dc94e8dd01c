#pragma once

#include <string>

namespace pvgate::util {

// "1343.56/s" -- the display convention for channel rates.
std::string format_rate(double per_sec);

// Fixed-point decimal, deterministic across runs.
std::string format_fixed(double v, int decimals);

}  // namespace pvgate::util
