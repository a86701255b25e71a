#include "egoscene/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace egoscene::log {

namespace {

Level g_threshold = Level::warn;
std::once_flag g_init;
std::mutex g_mutex;

Level parse_level(const char* s) {
  std::string v(s);
  if (v == "error") return Level::error;
  if (v == "warn") return Level::warn;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

const char* level_name(Level level) {
  switch (level) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() {
  std::call_once(g_init, [] {
    if (const char* env = std::getenv("EGOSCENE_LOG")) {
      g_threshold = parse_level(env);
    }
  });
  return g_threshold;
}

void set_threshold(Level level) {
  threshold();  // force env resolution so a later getenv cannot override
  g_threshold = level;
}

void write(Level level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[egoscene " << level_name(level) << "] " << msg << "\n";
}

}  // namespace egoscene::log
