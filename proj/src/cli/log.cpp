#include "pasnet/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace pasnet::log {

namespace {

spdlog::logger& logger()
{
    static const auto instance = [] {
        auto l = spdlog::stderr_logger_mt("pasnet");
        l->set_pattern("%Y-%m-%dT%H:%M:%S.%e %l %v");
        l->flush_on(spdlog::level::info);
        return l;
    }();
    return *instance;
}

spdlog::level::level_enum to_spdlog(Level level)
{
    switch (level) {
    case Level::Debug: return spdlog::level::debug;
    case Level::Info: return spdlog::level::info;
    case Level::Warn: return spdlog::level::warn;
    case Level::Error: return spdlog::level::err;
    case Level::Off: break;
    }
    return spdlog::level::off;
}

}  // namespace

void set_level(Level level) { logger().set_level(to_spdlog(level)); }

void write(Level level, std::string_view message)
{
    logger().log(to_spdlog(level), "{}", std::string(message));
}

}  // namespace pasnet::log
