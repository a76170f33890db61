#pragma once

#include <string_view>

// Thin wrapper over spdlog. The logging backend is compiled in a separate
// torch-free library because libtorch ships fmt headers that clash with the
// system fmt spdlog was built against.
namespace pasnet::log {

enum class Level { Debug, Info, Warn, Error, Off };

/// Records go to stderr, one per line: `<ISO-8601 time> <level> <message>`.
void set_level(Level level);
void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

}  // namespace pasnet::log
