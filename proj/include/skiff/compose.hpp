// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "skiff/diagnostics.hpp"
#include "skiff/kconfig.hpp"
#include "skiff/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace skiff::compose {

enum class OverlayKind { File, Directory, Symlink };

const char* to_string(OverlayKind kind);

struct OverlayAction {
    std::string rel_path; // forward-slash relative path, no ".." segments
    std::string layer;    // providing layer id (or pseudo-id for overrides)
    std::filesystem::path source;
    OverlayKind kind = OverlayKind::File;
};

struct OverlayPlan {
    std::vector<OverlayAction> actions;           // every provider, walk order
    std::map<std::string, OverlayAction> winners; // rel path -> last provider
};

// An extra overlay tree appended after all layers (used for overrides).
struct OverlayRoot {
    std::string label;
    std::filesystem::path path;
};

struct BuildPlan {
    std::string workspace;
    layers::Selection selection;
    std::vector<layers::Layer> layer_order;
    kconfig::MergedConfig configs[3]; // indexed by ConfigClass
    std::vector<std::string> cflags;
    std::vector<std::filesystem::path> patches[3]; // indexed by ConfigClass
    std::vector<std::filesystem::path> external_trees;
    std::vector<std::filesystem::path> hooks_pre;
    std::vector<std::filesystem::path> hooks_post;
    OverlayPlan overlay;

    const kconfig::MergedConfig& config(kconfig::ConfigClass cls) const {
        return configs[static_cast<int>(cls)];
    }
};

// Per-layer cflags file, one flag per line, '#' comments allowed. Duplicates
// are preserved in layer order.
std::vector<std::string> collect_cflags(const std::vector<layers::Layer>& ordered_layers);

// Per layer in order, *.patch files sorted lexicographically. Non-patch
// files are skipped with a warning.
std::vector<std::filesystem::path> collect_patches(
    const std::vector<layers::Layer>& ordered_layers, kconfig::ConfigClass cls,
    Diagnostics* diags = nullptr);

enum class HookPhase { Pre, Post };

// Hook scripts whose filename starts with the phase name ("pre", "post"),
// layer order then lexicographic.
std::vector<std::filesystem::path> collect_hooks(
    const std::vector<layers::Layer>& ordered_layers, HookPhase phase);

// Walks every layer's root_overlay tree in order, then the extra roots.
// Later providers of a path win; file/directory type conflicts are errors.
OverlayPlan compose_overlay(const std::vector<layers::Layer>& ordered_layers,
                            const std::vector<OverlayRoot>& extra_roots = {});

struct ApplyReport {
    std::uint64_t files_written = 0;
    std::uint64_t bytes_written = 0;
    std::map<std::string, std::string> winners; // rel path -> layer id
};

// Materializes the winning entries into target. Result is byte-identical to
// copying each layer tree sequentially. Symlinks are copied as links.
ApplyReport apply_overlay(const OverlayPlan& plan, const std::filesystem::path& target);

// Full composition for a workspace. The overrides root contributes config
// fragments (global then workspace-scoped) and an implicit overlay layer
// ordered last.
BuildPlan build_plan(const layers::Selection& selection, const layers::LayerCatalog& catalog,
                     const std::string& workspace,
                     const std::optional<std::filesystem::path>& overrides_root = {},
                     Diagnostics* diags = nullptr);

// Canonical serialized form; byte-deterministic for identical inputs.
std::string serialize_plan(const BuildPlan& plan);

struct SimulateReport {
    std::vector<std::string> files; // paths written, relative to output
    std::string tree_digest;
    std::vector<std::string> hook_runs;
};

// Writes rendered configs, cflags, manifests, the serialized plan and the
// staged overlay under output. Re-running on the same plan is idempotent.
// Hook execution is opt-in; each hook gets the output directory as its sole
// argument.
SimulateReport simulate_build(const BuildPlan& plan, const std::filesystem::path& output,
                              bool run_hooks = false);

} // namespace skiff::compose
