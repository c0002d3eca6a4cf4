#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

namespace pathways {

// All recoverable failures surface as Error; callers catch at the CLI
// boundary, library code throws and never aborts.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

template <typename... Args>
[[noreturn]] void fail(const char* fmt, Args... args) {
    char buf[1024];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    throw Error(buf);
}

template <typename... Args>
std::string format_str(const char* fmt, Args... args) {
    char buf[1024];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    return buf;
}

}  // namespace pathways
