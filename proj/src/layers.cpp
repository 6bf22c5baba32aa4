// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/layers.hpp"

#include "skiff/error.hpp"
#include "skiff/util.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fs = std::filesystem;

namespace skiff::layers {

const std::vector<std::string> kLayerMarkers = {
    "cflags",        "buildroot",      "buildroot_ext", "buildroot_patches",
    "extensions",    "hooks",          "kernel",        "kernel_patches",
    "root_overlay",  "metadata",       "resources",     "scripts",
    "uboot",         "uboot_patches",
};

namespace {

void check_segment(const std::string& seg, std::string_view original) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::Parse,
                    "invalid layer id \"" + std::string(original) + "\": " + why);
    };
    if (seg.empty()) fail("empty segment");
    if (seg == "." || seg == "..") fail("segment \"" + seg + "\" is not path-safe");
    for (char c : seg) {
        if (c == '/') fail("segment contains slash");
        if (std::isspace(static_cast<unsigned char>(c)))
            fail("segment contains whitespace");
    }
}

} // namespace

LayerId::LayerId(std::vector<std::string> segments) : segments_(std::move(segments)) {
    std::string text = str();
    if (segments_.empty())
        throw Error(ErrorKind::Parse, "invalid layer id \"\": no segments");
    for (const auto& seg : segments_) check_segment(seg, text);
}

LayerId LayerId::parse(std::string_view text) {
    if (text.empty())
        throw Error(ErrorKind::Parse, "invalid layer id \"\": no segments");
    std::vector<std::string> segments = util::split(text, '/');
    for (const auto& seg : segments) check_segment(seg, text);
    LayerId id;
    id.segments_ = std::move(segments);
    return id;
}

std::string LayerId::str() const {
    std::string out;
    for (size_t i = 0; i < segments_.size(); ++i) {
        if (i) out += '/';
        out += segments_[i];
    }
    return out;
}

Selection parse_selection(std::string_view text) {
    Selection selection;
    std::unordered_set<std::string> seen;
    for (const auto& raw : util::split(text, ',')) {
        std::string item = util::trim(raw);
        if (item.empty()) continue;
        LayerId id = LayerId::parse(item);
        if (seen.insert(id.str()).second) selection.push_back(std::move(id));
    }
    return selection;
}

std::string render_selection(const Selection& selection) {
    std::string out;
    for (size_t i = 0; i < selection.size(); ++i) {
        if (i) out += ',';
        out += selection[i].str();
    }
    return out;
}

LayerMetadata load_metadata(const fs::path& layer_dir) {
    LayerMetadata meta;
    fs::path meta_dir = layer_dir / "metadata";
    if (!fs::is_directory(meta_dir)) return meta;

    fs::path commands_file = meta_dir / "commands";
    if (fs::is_regular_file(commands_file)) {
        std::unordered_set<std::string> names;
        for (const auto& line : util::split_lines(util::read_file(commands_file))) {
            std::string trimmed = util::trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            size_t ws = trimmed.find_first_of(" \t");
            std::string name = ws == std::string::npos ? trimmed : trimmed.substr(0, ws);
            std::string desc = ws == std::string::npos
                                   ? std::string()
                                   : util::trim(trimmed.substr(ws + 1));
            if (!names.insert(name).second)
                throw Error(ErrorKind::Parse, "duplicate command \"" + name +
                                                  "\" in " + commands_file.string());
            meta.commands.push_back({std::move(name), std::move(desc)});
        }
    }

    fs::path deps_file = meta_dir / "dependencies";
    if (fs::is_regular_file(deps_file)) {
        std::string content = util::read_file(deps_file);
        std::replace(content.begin(), content.end(), '\n', ',');
        for (const auto& raw : util::split(content, ',')) {
            std::string item = util::trim(raw);
            if (item.empty()) continue;
            meta.dependencies.push_back(LayerId::parse(item));
        }
    }

    meta.description = util::read_first_line(meta_dir / "description");
    meta.unlisted = fs::exists(meta_dir / "unlisted");
    return meta;
}

namespace {

bool marker_present(const fs::path& dir, const std::string& marker) {
    // cflags is a plain file; all other markers are directories.
    fs::path p = dir / marker;
    return marker == "cflags" ? fs::is_regular_file(p) : fs::is_directory(p);
}

bool is_layer_dir(const fs::path& dir) {
    return std::any_of(kLayerMarkers.begin(), kLayerMarkers.end(),
                       [&](const std::string& m) { return marker_present(dir, m); });
}

// Registers layers under root. Recursion stops at a layer boundary so that
// overlay payload directories are never mistaken for nested layers.
void walk_root(const fs::path& root, const fs::path& dir,
               std::vector<std::string> segments, LayerCatalog& catalog) {
    if (!segments.empty() && is_layer_dir(dir)) {
        Layer layer;
        layer.id = LayerId(segments);
        layer.root = dir;
        for (const auto& marker : kLayerMarkers)
            if (marker_present(dir, marker)) layer.present.insert(marker);
        layer.metadata = load_metadata(dir);
        catalog.layers.insert_or_assign(layer.id, std::move(layer));
        return;
    }
    for (const auto& name : util::sorted_dir_entries(dir)) {
        fs::path child = dir / name;
        if (!fs::is_directory(child) || fs::is_symlink(child)) continue;
        auto child_segments = segments;
        child_segments.push_back(name);
        walk_root(root, child, std::move(child_segments), catalog);
    }
}

} // namespace

LayerCatalog discover_layers(const std::vector<fs::path>& search_roots) {
    if (search_roots.empty())
        throw Error(ErrorKind::Usage, "no layer search roots given");
    LayerCatalog catalog;
    catalog.search_roots = search_roots;
    for (const auto& root : search_roots) {
        if (!fs::is_directory(root))
            throw Error(ErrorKind::Io, "layer search root not found: " + root.string());
        walk_root(root, root, {}, catalog);
    }
    return catalog;
}

namespace {

struct Resolver {
    const LayerCatalog& catalog;
    const std::unordered_map<std::string, size_t>& selection_index;
    Diagnostics* diags;

    std::vector<Layer> order;
    std::unordered_set<std::string> emitted;
    std::unordered_set<std::string> in_progress;
    std::vector<std::string> stack;
    size_t current_selection_pos = 0;

    void visit(const LayerId& id) {
        std::string key = id.str();
        if (emitted.count(key)) return;
        if (in_progress.count(key)) {
            auto begin = std::find(stack.begin(), stack.end(), key);
            std::string cycle;
            for (auto it = begin; it != stack.end(); ++it) cycle += *it + " -> ";
            cycle += key;
            throw Error(ErrorKind::Resolution, "dependency cycle: " + cycle);
        }
        const Layer* layer = catalog.find(id);
        if (!layer)
            throw Error(ErrorKind::Resolution, "unknown layer: " + key);
        in_progress.insert(key);
        stack.push_back(key);
        for (const auto& dep : layer->metadata.dependencies) visit(dep);
        stack.pop_back();
        in_progress.erase(key);

        auto sel = selection_index.find(key);
        if (sel != selection_index.end() && sel->second > current_selection_pos)
            diag_note(diags, "layer " + key +
                                 " was selected later but is required earlier as a dependency");
        emitted.insert(key);
        order.push_back(*layer);
    }
};

} // namespace

std::vector<Layer> resolve_order(const Selection& selection, const LayerCatalog& catalog,
                                 Diagnostics* diags) {
    std::unordered_map<std::string, size_t> selection_index;
    for (size_t i = 0; i < selection.size(); ++i)
        selection_index.emplace(selection[i].str(), i);

    Resolver resolver{catalog, selection_index, diags, {}, {}, {}, {}, 0};
    for (size_t i = 0; i < selection.size(); ++i) {
        resolver.current_selection_pos = i;
        resolver.visit(selection[i]);
    }
    return std::move(resolver.order);
}

} // namespace skiff::layers
