#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace pixelrep {

enum class ErrorCode {
    InvalidArgument,
    Io,
    Config,
    Runtime,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

namespace detail {
template <class... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}
}  // namespace detail

template <class... Args>
[[noreturn]] void fail(ErrorCode code, Args&&... args) {
    throw Error(code, detail::cat(std::forward<Args>(args)...));
}

template <class... Args>
void require(bool ok, ErrorCode code, Args&&... args) {
    if (!ok) fail(code, std::forward<Args>(args)...);
}

}  // namespace pixelrep
