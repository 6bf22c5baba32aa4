// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace skiff::persist {

enum class PartitionRole { Boot, Rootfs, Persist, Vendor };

const char* to_string(PartitionRole role);
PartitionRole parse_partition_role(std::string_view text);

struct Partition {
    std::string name;
    std::uint64_t start = 0; // bytes
    std::uint64_t size = 0;  // bytes
    PartitionRole role = PartitionRole::Vendor;

    std::uint64_t end() const { return start + size; }
};

// Partitions are non-overlapping, sorted by start, within the medium;
// exactly one persist partition and it comes last.
struct MediaLayout {
    std::uint64_t media_size = 0;
    std::uint64_t reserved_prefix = 0; // raw bootloader area at the front
    std::vector<Partition> partitions;
};

// Persist partitions start at this size and are grown on first boot.
inline constexpr std::uint64_t kInitialPersistSize = 256ull * 1024 * 1024;

void validate_layout(const MediaLayout& layout);

// Default three-partition plan: [boot, rootfs, persist] laid out contiguously
// after the reserved prefix, persist at its small initial size.
MediaLayout plan_layout(std::uint64_t media_size, std::uint64_t boot_size,
                        std::uint64_t rootfs_size, std::uint64_t reserved_prefix = 0);

// Vendor-mandated layouts: one partition per line, "name start size role".
MediaLayout parse_layout_descriptor(const std::string& text, std::uint64_t media_size);
std::string render_layout_descriptor(const MediaLayout& layout);

// Extends the persist partition to the end of the medium. Idempotent and
// monotonic; every other partition is untouched.
MediaLayout grow_persist(const MediaLayout& layout, std::uint64_t media_size);

// The canonical persist tree: 8 entries, "hostname" a file, the rest
// directories.
extern const std::vector<std::string> kPersistDirs; // 7 directory entries
inline constexpr const char* kHostnameEntry = "hostname";
inline constexpr const char* kSwapfileName = "swapfile";

struct PersistTree {
    std::map<std::string, bool> entries; // name -> is_directory
    std::optional<std::uint64_t> swapfile_size;
    std::vector<std::string> created; // entries created by this run
};

// Creates missing canonical entries under target without touching existing
// content. A swap size records intent as a sparse placeholder file.
PersistTree scaffold_tree(const std::filesystem::path& target,
                          std::optional<std::uint64_t> swap_size = {});

} // namespace skiff::persist
