// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "skiff/diagnostics.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace skiff::layers {

// Identity of one configuration layer, e.g. "pi/4". Segments are path-safe
// tokens: non-empty, no slash, no whitespace, not "." or "..".
class LayerId {
public:
    LayerId() = default;
    explicit LayerId(std::vector<std::string> segments);

    // Parses canonical "a/b" text. Throws Error{Parse} on malformed input.
    static LayerId parse(std::string_view text);

    const std::vector<std::string>& segments() const { return segments_; }
    std::string str() const;

    auto operator<=>(const LayerId&) const = default;

private:
    std::vector<std::string> segments_;
};

struct LayerCommand {
    std::string name;
    std::string description;
};

struct LayerMetadata {
    std::vector<LayerCommand> commands;
    std::vector<LayerId> dependencies;
    std::string description;
    bool unlisted = false;
};

// The 14 directory markers a layer may carry. "cflags" is a file, the rest
// are directories.
extern const std::vector<std::string> kLayerMarkers;

struct Layer {
    LayerId id;
    std::filesystem::path root;
    std::set<std::string> present;
    LayerMetadata metadata;

    bool has(const std::string& marker) const { return present.count(marker) > 0; }
    std::filesystem::path dir(const std::string& marker) const { return root / marker; }
};

struct LayerCatalog {
    std::vector<std::filesystem::path> search_roots;
    std::map<LayerId, Layer> layers;

    const Layer* find(const LayerId& id) const {
        auto it = layers.find(id);
        return it == layers.end() ? nullptr : &it->second;
    }
};

// Ordered, de-duplicated list of selected layer ids.
using Selection = std::vector<LayerId>;

// Splits a comma-separated list, trims items, drops empties, keeps the first
// occurrence of duplicates.
Selection parse_selection(std::string_view text);

std::string render_selection(const Selection& selection);

// Reads metadata/{commands,dependencies,description,unlisted}; all optional.
LayerMetadata load_metadata(const std::filesystem::path& layer_dir);

// Walks each search root for directories carrying at least one marker.
// Later roots shadow earlier ones for the same id. Walk-order independent.
LayerCatalog discover_layers(const std::vector<std::filesystem::path>& search_roots);

// Resolved order: every selected layer plus transitive dependencies exactly
// once, dependencies before dependents, user relative order otherwise
// preserved (dependencies inserted immediately before their first dependent).
std::vector<Layer> resolve_order(const Selection& selection, const LayerCatalog& catalog,
                                 Diagnostics* diags = nullptr);

} // namespace skiff::layers
