#pragma once

#include <sstream>
#include <string>

namespace egoscene::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Level comes from the EGOSCENE_LOG env var (error|warn|info|debug),
// default warn. Resolved once on first use.
Level threshold();
void set_threshold(Level level);

void write(Level level, const std::string& msg);

}  // namespace egoscene::log

#define EGOSCENE_LOG_AT(lvl, expr)                                  \
  do {                                                              \
    if (static_cast<int>(lvl) <=                                    \
        static_cast<int>(::egoscene::log::threshold())) {           \
      std::ostringstream egoscene_log_os_;                          \
      egoscene_log_os_ << expr;                                     \
      ::egoscene::log::write(lvl, egoscene_log_os_.str());          \
    }                                                               \
  } while (0)

#define LOG_ERROR(expr) EGOSCENE_LOG_AT(::egoscene::log::Level::error, expr)
#define LOG_WARN(expr) EGOSCENE_LOG_AT(::egoscene::log::Level::warn, expr)
#define LOG_INFO(expr) EGOSCENE_LOG_AT(::egoscene::log::Level::info, expr)
#define LOG_DEBUG(expr) EGOSCENE_LOG_AT(::egoscene::log::Level::debug, expr)
