#include "mobtune/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace mobtune {

namespace {

LogLevel parse_level(const char* s) {
  if (s == nullptr) return LogLevel::Warn;
  std::string v(s);
  for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  if (v == "warn" || v == "warning") return LogLevel::Warn;
  if (v == "error") return LogLevel::Error;
  if (v == "off" || v == "none") return LogLevel::Off;
  return LogLevel::Warn;
}

const char* level_tag(LogLevel l) {
  switch (l) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warn: return "warn";
    case LogLevel::Error: return "error";
    default: return "?";
  }
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level(std::getenv("MOBTUNE_LOG"));
  return level;
}

void log_message(LogLevel level, const std::string& msg) {
  if (level < log_level()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[mobtune " << level_tag(level) << "] " << msg << "\n";
}

}  // namespace mobtune
