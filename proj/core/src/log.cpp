#include "pnlss/log.hpp"

#include "pnlss/errors.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace pnlss::log {

namespace {
std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

const char* tag(Level level) {
    switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: break;
    }
    return "";
}
} // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

Level parse_level(std::string_view name) {
    if (name == "debug") return Level::Debug;
    if (name == "info") return Level::Info;
    if (name == "warn" || name == "warning") return Level::Warn;
    if (name == "error") return Level::Error;
    if (name == "off") return Level::Off;
    throw ConfigError("unknown log level '" + std::string(name) + "'");
}

void write(Level level, std::string_view message) {
    if (level < g_level.load() || level == Level::Off) return;
    std::lock_guard lock(g_mutex);
    std::cerr << "[pnlss:" << tag(level) << "] " << message << '\n';
}

} // namespace pnlss::log
