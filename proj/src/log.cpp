#include "panelgwas/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace panelgwas::log {

namespace {
std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
  std::lock_guard lock(g_mutex);
  std::cerr << tag << msg << '\n';
}
}  // namespace

void set_level(Level l) { g_level = l; }
Level level() { return g_level; }

void warn(const std::string& msg) {
  if (g_level >= Level::Warn) emit("warning: ", msg);
}
void info(const std::string& msg) {
  if (g_level >= Level::Info) emit("", msg);
}
void debug(const std::string& msg) {
  if (g_level >= Level::Debug) emit("debug: ", msg);
}

}  // namespace panelgwas::log
