#pragma once

#include <stdexcept>
#include <string>

namespace tqk {

// Invalid arguments, malformed inputs, failed validation. CLI exit code 1.
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string & msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures (open/read/write/rename). CLI exit code 2.
struct io_error : std::runtime_error {
    explicit io_error(const std::string & msg) : std::runtime_error(msg) {}
};

} // namespace tqk
