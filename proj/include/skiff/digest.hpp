// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace skiff::digest {

// Hex-encoded SHA-256. The single digest algorithm used across the project
// (OTA manifests, tree digests); declared by name in manifests.
inline constexpr const char* kAlgoName = "sha256";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

// Digest of a directory tree: walks sorted relative paths and hashes
// path + kind + content (symlink targets hashed as text). Timestamps and
// ownership are ignored, so equal content yields equal digests.
std::string tree_digest_hex(const std::filesystem::path& root);

} // namespace skiff::digest
