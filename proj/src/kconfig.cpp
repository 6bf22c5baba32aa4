// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/kconfig.hpp"

#include "skiff/error.hpp"
#include "skiff/util.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace fs = std::filesystem;

namespace skiff::kconfig {

namespace {

// Keys look like CONFIG_EXT3_FS / BR2_PACKAGE_FOO: an uppercase prefix
// followed by [A-Z0-9_].
bool valid_key(std::string_view key) {
    if (key.empty() || key.front() < 'A' || key.front() > 'Z') return false;
    if (key.find('_') == std::string_view::npos) return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

bool integer_text(std::string_view text) {
    if (text.empty()) return false;
    size_t i = text[0] == '-' ? 1 : 0;
    if (i == text.size()) return false;
    for (; i < text.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
    return true;
}

KconfigValue classify(std::string_view value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        return KconfigValue::string(std::string(value.substr(1, value.size() - 2)));
    if (value == "y") return KconfigValue::yes();
    if (value == "m") return KconfigValue::module();
    if (value == "n") return KconfigValue::unset();
    if (integer_text(value)) return KconfigValue::number(std::string(value));
    return KconfigValue::raw(std::string(value));
}

// "# KEY is not set" -> KEY, otherwise empty.
std::string match_unset_directive(std::string_view line) {
    if (line.empty() || line[0] != '#') return "";
    std::string rest = util::trim(line.substr(1));
    constexpr std::string_view suffix = " is not set";
    if (rest.size() <= suffix.size()) return "";
    if (std::string_view(rest).substr(rest.size() - suffix.size()) != suffix) return "";
    std::string key = util::trim(rest.substr(0, rest.size() - suffix.size()));
    return valid_key(key) ? key : "";
}

} // namespace

std::string KconfigValue::render() const {
    switch (kind) {
    case ValueKind::TristateYes: return "y";
    case ValueKind::TristateModule: return "m";
    case ValueKind::TristateNoUnset: return "n";
    case ValueKind::String: return "\"" + text + "\"";
    case ValueKind::Number:
    case ValueKind::Raw: return text;
    }
    return text;
}

std::string SourceRef::str() const {
    return file.string() + ":" + std::to_string(line);
}

void MergedConfig::assign(const KconfigAssignment& assignment) {
    auto it = index_.find(assignment.key);
    if (it == index_.end()) {
        index_.emplace(assignment.key, entries_.size());
        entries_.push_back({assignment.key, assignment.value, assignment.source});
    } else {
        entries_[it->second].value = assignment.value;
        entries_[it->second].winner = assignment.source;
    }
}

const MergedConfig::Entry* MergedConfig::find(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

const std::string& class_dir(ConfigClass cls) {
    static const std::string names[] = {"buildroot", "kernel", "uboot"};
    return names[static_cast<int>(cls)];
}

const std::string& patches_dir(ConfigClass cls) {
    static const std::string names[] = {"buildroot_patches", "kernel_patches",
                                        "uboot_patches"};
    return names[static_cast<int>(cls)];
}

KconfigFragment parse_fragment(std::string_view text, fs::path source,
                               Diagnostics* diags) {
    KconfigFragment fragment;
    fragment.source = std::move(source);
    std::unordered_set<std::string> keys_seen;

    auto lines = util::split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        SourceRef ref{fragment.source, i + 1};
        std::string line = util::trim(lines[i]);
        if (line.empty()) continue;

        if (std::string key = match_unset_directive(line); !key.empty()) {
            if (!keys_seen.insert(key).second)
                diag_warn(diags, "duplicate key " + key + " in fragment at " + ref.str() +
                                     "; last assignment wins");
            fragment.assignments.push_back({std::move(key), KconfigValue::unset(), ref});
            continue;
        }
        if (line[0] == '#') continue;

        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Parse,
                        "not a kconfig assignment at " + ref.str() + ": " + line);
        std::string key = line.substr(0, eq);
        if (!valid_key(key))
            throw Error(ErrorKind::Parse,
                        "invalid kconfig key at " + ref.str() + ": " + key);
        if (!keys_seen.insert(key).second)
            diag_warn(diags, "duplicate key " + key + " in fragment at " + ref.str() +
                                 "; last assignment wins");
        fragment.assignments.push_back({std::move(key), classify(line.substr(eq + 1)), ref});
    }
    return fragment;
}

KconfigFragment parse_fragment_file(const fs::path& path, Diagnostics* diags) {
    return parse_fragment(util::read_file(path), path, diags);
}

namespace {

void append_dir_fragments(const fs::path& dir, std::vector<fs::path>& out) {
    for (const auto& name : util::sorted_dir_entries(dir)) {
        fs::path p = dir / name;
        if (fs::is_regular_file(p)) out.push_back(p);
    }
}

} // namespace

std::vector<fs::path> collect_fragment_paths(
    const std::vector<layers::Layer>& ordered_layers, ConfigClass cls,
    const std::optional<fs::path>& overrides_root, const std::string& workspace) {
    std::vector<fs::path> paths;
    const std::string& dir = class_dir(cls);
    for (const auto& layer : ordered_layers)
        if (layer.has(dir)) append_dir_fragments(layer.dir(dir), paths);
    if (overrides_root) {
        append_dir_fragments(*overrides_root / dir, paths);
        append_dir_fragments(*overrides_root / "workspaces" / workspace / dir, paths);
    }
    return paths;
}

MergedConfig merge_fragments(const std::vector<KconfigFragment>& fragments) {
    MergedConfig merged;
    for (const auto& fragment : fragments)
        for (const auto& assignment : fragment.assignments)
            merged.assign(assignment);
    return merged;
}

std::string render_config(const MergedConfig& merged) {
    std::string out;
    for (const auto& entry : merged.entries()) {
        if (entry.value.kind == ValueKind::TristateNoUnset) {
            out += "# " + entry.key + " is not set\n";
        } else {
            out += entry.key + "=" + entry.value.render() + "\n";
        }
    }
    return out;
}

} // namespace skiff::kconfig
