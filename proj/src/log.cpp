#include "pale/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace pale {

namespace {

std::mutex g_mutex;
std::atomic<LogLevel> g_level{LogLevel::Info};

const char* level_name(LogLevel level) {
    switch (level) {
        case LogLevel::Debug:
            return "debug";
        case LogLevel::Info:
            return "info";
        case LogLevel::Warn:
            return "warning";
        case LogLevel::Error:
            return "error";
    }
    return "info";
}

LogSink& sink() {
    static LogSink s = [](LogLevel level, std::string_view message) {
        std::cerr << "[" << level_name(level) << "] " << message << '\n';
    };
    return s;
}

}  // namespace

LogSink set_log_sink(LogSink s) {
    std::lock_guard lock(g_mutex);
    LogSink old = std::move(sink());
    sink() = std::move(s);
    return old;
}

void set_log_level(LogLevel min_level) { g_level = min_level; }

void log(LogLevel level, std::string_view message) {
    if (level < g_level.load()) return;
    std::lock_guard lock(g_mutex);
    if (sink()) sink()(level, message);
}

}  // namespace pale
