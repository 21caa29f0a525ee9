#ifndef CYLBIF_LOG_HPP
#define CYLBIF_LOG_HPP

// stderr logging; verbosity from CYLBIF_LOG ∈ {error, info, debug}.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace cylbif::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("CYLBIF_LOG");
    const std::string_view v = env ? env : "info";
    if (v == "error") return Level::Error;
    if (v == "debug") return Level::Debug;
    return Level::Info;
  }();
  return level;
}

inline void write(Level level, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  static constexpr const char* tags[] = {"error", "info", "debug"};
  std::cerr << "[" << tags[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

}  // namespace cylbif::log

#endif  // CYLBIF_LOG_HPP
