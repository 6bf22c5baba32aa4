// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace skiff {

// Non-fatal findings collected while parsing and planning. Callers that do
// not care pass nullptr.
class Diagnostics {
public:
    void warn(std::string message) { warnings_.push_back(std::move(message)); }
    void note(std::string message) { notes_.push_back(std::move(message)); }

    const std::vector<std::string>& warnings() const { return warnings_; }
    const std::vector<std::string>& notes() const { return notes_; }
    bool empty() const { return warnings_.empty() && notes_.empty(); }

private:
    std::vector<std::string> warnings_;
    std::vector<std::string> notes_;
};

inline void diag_warn(Diagnostics* diags, std::string message) {
    if (diags) diags->warn(std::move(message));
}

inline void diag_note(Diagnostics* diags, std::string message) {
    if (diags) diags->note(std::move(message));
}

} // namespace skiff
