#pragma once

// Shared bits for the command line tools: identity defaults, signal
// flags, and exit codes.

#include <csignal>
#include <cstdlib>
#include <string>
#include <unistd.h>

#include "pvgate/proto/value.hpp"

namespace tool {

// 0 ok, 2 not-found, 3 denied, 4 duplicate, 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotFound = 2;
inline constexpr int kExitDenied = 3;
inline constexpr int kExitDuplicate = 4;

inline pvgate::proto::Identity default_identity() {
  const char* user = std::getenv("USER");
  char host[256] = "localhost";
  gethostname(host, sizeof(host) - 1);
  return {user && *user ? user : "anon", host};
}

// "USER@HOST"; a bare "USER" keeps the local hostname.
inline pvgate::proto::Identity parse_identity(const std::string& spec) {
  auto id = default_identity();
  if (spec.empty()) return id;
  auto at = spec.find('@');
  if (at == std::string::npos) {
    id.user = spec;
  } else {
    id.user = spec.substr(0, at);
    id.host = spec.substr(at + 1);
  }
  return id;
}

inline volatile std::sig_atomic_t g_stop = 0;
inline volatile std::sig_atomic_t g_dump_stats = 0;

inline void install_signal_handlers() {
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  std::signal(SIGUSR1, [](int) { g_dump_stats = 1; });
}

}  // namespace tool
