#include "xmf/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace xmf {
namespace {

LogLevel parse_level(const char* s) {
    if (!s) return LogLevel::warn;
    std::string v(s);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    if (v == "warn") return LogLevel::warn;
    if (v == "error") return LogLevel::error;
    if (v == "off") return LogLevel::off;
    return LogLevel::warn;
}

LogLevel& level_ref() {
    static LogLevel level = parse_level(std::getenv("XMF_LOG"));
    return level;
}

const char* level_tag(LogLevel l) {
    switch (l) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warn: return "warn";
        case LogLevel::error: return "error";
        default: return "";
    }
}

}  // namespace

LogLevel log_level() { return level_ref(); }
void set_log_level(LogLevel level) { level_ref() = level; }

void log_message(LogLevel level, const std::string& msg) {
    if (level < level_ref()) return;
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::cerr << "[xmf:" << level_tag(level) << "] " << msg << "\n";
}

}  // namespace xmf
