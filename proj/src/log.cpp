#include "hgp/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace hgp::log {

namespace {

Level parse_level() {
  const char* env = std::getenv("HGP_LOG");
  if (env == nullptr) return Level::kWarn;
  const std::string value(env);
  if (value == "error") return Level::kError;
  if (value == "warn") return Level::kWarn;
  if (value == "info") return Level::kInfo;
  if (value == "debug") return Level::kDebug;
  return Level::kWarn;
}

const char* tag(Level level) {
  switch (level) {
    case Level::kError: return "error";
    case Level::kWarn: return "warn";
    case Level::kInfo: return "info";
    case Level::kDebug: return "debug";
  }
  return "?";
}

std::mutex g_mutex;

}  // namespace

Level threshold() {
  static const Level value = parse_level();
  return value;
}

bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

void write(Level level, const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[hgp:" << tag(level) << "] " << message << "\n";
}

}  // namespace hgp::log
