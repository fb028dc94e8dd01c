#include "pvgate/util/format.hpp"

#include <cstdio>

namespace pvgate::util {

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string format_rate(double per_sec) {
  return format_fixed(per_sec, 2) + "/s";
}

}  // namespace pvgate::util
