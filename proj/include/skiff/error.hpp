// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace skiff {

// Error classes map onto the CLI exit-code table:
//   0 ok, 2 usage/resolution/parse, 3 conflict/validation, 4 I/O/transport.
enum class ErrorKind {
    Usage,
    Parse,
    Resolution,
    Conflict,
    Validation,
    Io,
    Transport,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
        case ErrorKind::Usage:
        case ErrorKind::Parse:
        case ErrorKind::Resolution:
            return 2;
        case ErrorKind::Conflict:
        case ErrorKind::Validation:
            return 3;
        case ErrorKind::Io:
        case ErrorKind::Transport:
            return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::Transport: return "transport";
    }
    return "error";
}

} // namespace skiff
