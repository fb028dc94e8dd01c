#pragma once

#include <map>
#include <string>
#include <string_view>

namespace pvgate::util {

// `key = value` lines; '#' and ';' start comments; blank lines ignored.
// Later keys override earlier ones.
std::map<std::string, std::string> parse_ini(std::string_view text);

}  // namespace pvgate::util
