// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace skiff::util {

std::string trim(std::string_view text);

// Splits on a single-character separator; does not trim or drop empties.
std::vector<std::string> split(std::string_view text, char sep);

// Splits text into lines on '\n', tolerating a trailing '\r' per line.
std::vector<std::string> split_lines(std::string_view text);

bool starts_with(std::string_view text, std::string_view prefix);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// First line of a file, empty string when the file is missing.
std::string read_first_line(const std::filesystem::path& path);

// Sorted names of directory entries; missing directory yields {}.
std::vector<std::string> sorted_dir_entries(const std::filesystem::path& dir);

// Parses "4096", "64K", "512MiB", "8G" and the like into bytes.
std::uint64_t parse_size(std::string_view text);

} // namespace skiff::util
