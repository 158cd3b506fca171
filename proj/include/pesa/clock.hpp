#pragma once

#include <cstdio>
#include <ctime>
#include <functional>
#include <string>

namespace pesa {

using Clock = std::function<std::string()>;

inline std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

inline Clock fixed_clock(std::string stamp) {
    return [stamp = std::move(stamp)] { return stamp; };
}

}  // namespace pesa
