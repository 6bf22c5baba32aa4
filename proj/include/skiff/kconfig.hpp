// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "skiff/diagnostics.hpp"
#include "skiff/layers.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace skiff::kconfig {

enum class ValueKind {
    TristateYes,    // y
    TristateModule, // m
    TristateNoUnset, // "# KEY is not set" (or KEY=n)
    String,         // quoted
    Number,         // integer text
    Raw,            // anything else
};

struct KconfigValue {
    ValueKind kind = ValueKind::Raw;
    // String: unquoted content. Number/Raw: verbatim text. Tristates: empty.
    std::string text;

    static KconfigValue yes() { return {ValueKind::TristateYes, {}}; }
    static KconfigValue module() { return {ValueKind::TristateModule, {}}; }
    static KconfigValue unset() { return {ValueKind::TristateNoUnset, {}}; }
    static KconfigValue string(std::string s) { return {ValueKind::String, std::move(s)}; }
    static KconfigValue number(std::string n) { return {ValueKind::Number, std::move(n)}; }
    static KconfigValue raw(std::string r) { return {ValueKind::Raw, std::move(r)}; }

    // Right-hand side as it appears after "KEY=". Not defined for unset,
    // which renders as a whole-line directive.
    std::string render() const;

    bool operator==(const KconfigValue&) const = default;
};

struct SourceRef {
    std::filesystem::path file;
    std::size_t line = 0;

    std::string str() const;
    bool operator==(const SourceRef&) const = default;
};

struct KconfigAssignment {
    std::string key;
    KconfigValue value;
    SourceRef source;
};

struct KconfigFragment {
    std::filesystem::path source;
    std::vector<KconfigAssignment> assignments;
};

// Merged key -> value map preserving first-seen key order; each entry keeps
// the source of the assignment that won.
class MergedConfig {
public:
    struct Entry {
        std::string key;
        KconfigValue value;
        SourceRef winner;
    };

    void assign(const KconfigAssignment& assignment);
    const Entry* find(const std::string& key) const;
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class ConfigClass { Buildroot, Kernel, Uboot };

// Fragment directory name within a layer ("buildroot", "kernel", "uboot").
const std::string& class_dir(ConfigClass cls);
// Patch directory name ("buildroot_patches", ...).
const std::string& patches_dir(ConfigClass cls);

// Parses one fragment. Grammar per line: KEY=value, "# KEY is not set",
// comment, or blank. Values classify as quoted string / y / m / n /
// integer / raw.
KconfigFragment parse_fragment(std::string_view text, std::filesystem::path source,
                               Diagnostics* diags = nullptr);

KconfigFragment parse_fragment_file(const std::filesystem::path& path,
                                    Diagnostics* diags = nullptr);

// Fragment file order for one class: per layer in resolved order
// (lexicographic inside a layer), then global overrides, then
// workspace-scoped overrides.
std::vector<std::filesystem::path> collect_fragment_paths(
    const std::vector<layers::Layer>& ordered_layers, ConfigClass cls,
    const std::optional<std::filesystem::path>& overrides_root,
    const std::string& workspace);

// Last assignment per key wins; key order is first occurrence.
MergedConfig merge_fragments(const std::vector<KconfigFragment>& fragments);

// One line per key in insertion order; unset keys render as the
// "# KEY is not set" directive. Every line ends with '\n'.
std::string render_config(const MergedConfig& merged);

} // namespace skiff::kconfig
