// Minimal stderr logger controlled by CANON_LOG={error|info|debug}.
#pragma once

#include <string>

namespace canon {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

}  // namespace canon

#define CANON_LOG_ERROR(msg) ::canon::log_message(::canon::LogLevel::Error, (msg))
#define CANON_LOG_INFO(msg) ::canon::log_message(::canon::LogLevel::Info, (msg))
#define CANON_LOG_DEBUG(msg) ::canon::log_message(::canon::LogLevel::Debug, (msg))
