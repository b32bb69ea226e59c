#pragma once

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace softclt::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold from SOFTCLT_LOG (error|warn|info|debug), default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("SOFTCLT_LOG");
    if (!env) return Level::Warn;
    const std::string_view v(env);
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

inline void write(Level level, std::string_view tag, std::string_view msg) {
  if (level <= threshold()) std::cerr << "[softclt " << tag << "] " << msg << '\n';
}

inline void warn(std::string_view msg) { write(Level::Warn, "warn", msg); }
inline void info(std::string_view msg) { write(Level::Info, "info", msg); }
inline void debug(std::string_view msg) { write(Level::Debug, "debug", msg); }

}  // namespace softclt::log
