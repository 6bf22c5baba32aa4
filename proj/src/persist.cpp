// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/persist.hpp"

#include "skiff/error.hpp"
#include "skiff/util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace skiff::persist {

const char* to_string(PartitionRole role) {
    switch (role) {
    case PartitionRole::Boot: return "boot";
    case PartitionRole::Rootfs: return "rootfs";
    case PartitionRole::Persist: return "persist";
    case PartitionRole::Vendor: return "vendor";
    }
    return "vendor";
}

PartitionRole parse_partition_role(std::string_view text) {
    if (text == "boot") return PartitionRole::Boot;
    if (text == "rootfs") return PartitionRole::Rootfs;
    if (text == "persist") return PartitionRole::Persist;
    if (text == "vendor") return PartitionRole::Vendor;
    throw Error(ErrorKind::Parse, "unknown partition role: " + std::string(text));
}

void validate_layout(const MediaLayout& layout) {
    auto fail = [](const std::string& why) {
        throw Error(ErrorKind::Validation, "invalid media layout: " + why);
    };
    std::uint64_t cursor = 0;
    size_t persist_count = 0;
    for (size_t i = 0; i < layout.partitions.size(); ++i) {
        const Partition& p = layout.partitions[i];
        if (p.size == 0) fail("partition " + p.name + " has zero size");
        if (p.start < cursor) fail("partition " + p.name + " overlaps its predecessor");
        if (p.end() > layout.media_size) fail("partition " + p.name + " exceeds the medium");
        if (p.role == PartitionRole::Persist) {
            ++persist_count;
            if (i + 1 != layout.partitions.size()) fail("persist partition must be last");
        }
        cursor = p.end();
    }
    if (persist_count != 1) fail("exactly one persist partition required");
}

MediaLayout plan_layout(std::uint64_t media_size, std::uint64_t boot_size,
                        std::uint64_t rootfs_size, std::uint64_t reserved_prefix) {
    std::uint64_t required = reserved_prefix + boot_size + rootfs_size + kInitialPersistSize;
    if (media_size <= required || boot_size == 0 || rootfs_size == 0)
        throw Error(ErrorKind::Validation,
                    "media too small: need more than " + std::to_string(required) +
                        " bytes, have " + std::to_string(media_size));

    MediaLayout layout;
    layout.media_size = media_size;
    layout.reserved_prefix = reserved_prefix;
    std::uint64_t cursor = reserved_prefix;
    layout.partitions.push_back({"boot", cursor, boot_size, PartitionRole::Boot});
    cursor += boot_size;
    layout.partitions.push_back({"rootfs", cursor, rootfs_size, PartitionRole::Rootfs});
    cursor += rootfs_size;
    layout.partitions.push_back({"persist", cursor, kInitialPersistSize, PartitionRole::Persist});
    validate_layout(layout);
    return layout;
}

MediaLayout parse_layout_descriptor(const std::string& text, std::uint64_t media_size) {
    MediaLayout layout;
    layout.media_size = media_size;
    auto lines = util::split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string line = util::trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream in(line);
        Partition p;
        std::string start_text, size_text, role_text;
        if (!(in >> p.name >> start_text >> size_text >> role_text))
            throw Error(ErrorKind::Parse, "layout descriptor line " + std::to_string(i + 1) +
                                              ": want \"name start size role\"");
        p.start = util::parse_size(start_text);
        p.size = util::parse_size(size_text);
        p.role = parse_partition_role(role_text);
        layout.partitions.push_back(std::move(p));
    }
    // First partition start doubles as the reserved prefix.
    if (!layout.partitions.empty()) layout.reserved_prefix = layout.partitions.front().start;
    validate_layout(layout);
    return layout;
}

std::string render_layout_descriptor(const MediaLayout& layout) {
    std::string out;
    for (const auto& p : layout.partitions)
        out += p.name + " " + std::to_string(p.start) + " " + std::to_string(p.size) + " " +
               to_string(p.role) + "\n";
    return out;
}

MediaLayout grow_persist(const MediaLayout& layout, std::uint64_t media_size) {
    validate_layout(layout);
    if (layout.partitions.empty() ||
        layout.partitions.back().role != PartitionRole::Persist)
        throw Error(ErrorKind::Validation, "persist partition is not last");
    std::uint64_t extent = layout.partitions.back().end();
    if (media_size < extent)
        throw Error(ErrorKind::Validation,
                    "media size " + std::to_string(media_size) +
                        " is smaller than the current layout extent " +
                        std::to_string(extent));

    MediaLayout grown = layout;
    grown.media_size = media_size;
    Partition& persist = grown.partitions.back();
    persist.size = media_size - persist.start;
    validate_layout(grown);
    return grown;
}

const std::vector<std::string> kPersistDirs = {
    "connections", "core", "docker", "etc", "journal", "keys", "ssh",
};

PersistTree scaffold_tree(const fs::path& target, std::optional<std::uint64_t> swap_size) {
    if (!fs::is_directory(target))
        throw Error(ErrorKind::Io, "persist target is not a directory: " + target.string());

    PersistTree tree;
    for (const auto& name : kPersistDirs) {
        fs::path dir = target / name;
        if (!fs::exists(dir)) {
            fs::create_directory(dir);
            tree.created.push_back(name);
        }
        tree.entries[name] = true;
    }
    fs::path hostname = target / kHostnameEntry;
    if (!fs::exists(hostname)) {
        util::write_file(hostname, "");
        tree.created.push_back(kHostnameEntry);
    }
    tree.entries[kHostnameEntry] = false;

    if (swap_size) {
        fs::path swapfile = target / kSwapfileName;
        if (!fs::exists(swapfile)) {
            // Sparse placeholder: records the intended logical size without
            // allocating it.
            std::ofstream out(swapfile, std::ios::binary);
            if (!out)
                throw Error(ErrorKind::Io, "cannot create swapfile placeholder: " +
                                               swapfile.string());
            out.close();
            fs::resize_file(swapfile, *swap_size);
            tree.created.push_back(kSwapfileName);
        }
        tree.swapfile_size = fs::file_size(swapfile);
    } else if (fs::exists(target / kSwapfileName)) {
        tree.swapfile_size = fs::file_size(target / kSwapfileName);
    }
    return tree;
}

} // namespace skiff::persist
