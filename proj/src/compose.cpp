// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/compose.hpp"

#include "skiff/digest.hpp"
#include "skiff/error.hpp"
#include "skiff/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <system_error>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace skiff::compose {

const char* to_string(OverlayKind kind) {
    switch (kind) {
    case OverlayKind::File: return "file";
    case OverlayKind::Directory: return "directory";
    case OverlayKind::Symlink: return "symlink";
    }
    return "file";
}

std::vector<std::string> collect_cflags(const std::vector<layers::Layer>& ordered_layers) {
    std::vector<std::string> flags;
    for (const auto& layer : ordered_layers) {
        if (!layer.has("cflags")) continue;
        for (const auto& line : util::split_lines(util::read_file(layer.dir("cflags")))) {
            std::string flag = util::trim(line);
            if (flag.empty() || flag[0] == '#') continue;
            flags.push_back(std::move(flag));
        }
    }
    return flags;
}

std::vector<fs::path> collect_patches(const std::vector<layers::Layer>& ordered_layers,
                                      kconfig::ConfigClass cls, Diagnostics* diags) {
    std::vector<fs::path> patches;
    const std::string& dir = kconfig::patches_dir(cls);
    for (const auto& layer : ordered_layers) {
        if (!layer.has(dir)) continue;
        for (const auto& name : util::sorted_dir_entries(layer.dir(dir))) {
            fs::path p = layer.dir(dir) / name;
            if (!fs::is_regular_file(p)) continue;
            if (p.extension() != ".patch") {
                diag_warn(diags, "ignoring non-patch file in " + dir + " of layer " +
                                     layer.id.str() + ": " + name);
                continue;
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

std::vector<fs::path> collect_hooks(const std::vector<layers::Layer>& ordered_layers,
                                    HookPhase phase) {
    const std::string prefix = phase == HookPhase::Pre ? "pre" : "post";
    std::vector<fs::path> hooks;
    for (const auto& layer : ordered_layers) {
        if (!layer.has("hooks")) continue;
        for (const auto& name : util::sorted_dir_entries(layer.dir("hooks"))) {
            fs::path p = layer.dir("hooks") / name;
            if (fs::is_regular_file(p) && util::starts_with(name, prefix))
                hooks.push_back(std::move(p));
        }
    }
    return hooks;
}

namespace {

bool is_dir_kind(OverlayKind kind) { return kind == OverlayKind::Directory; }

// Recursively records every entry of tree under rel, later providers
// replacing earlier non-directory winners.
void walk_overlay_tree(const std::string& label, const fs::path& tree, const fs::path& sub,
                       const std::string& rel, OverlayPlan& plan) {
    for (const auto& name : util::sorted_dir_entries(sub)) {
        fs::path abs = sub / name;
        std::string rel_path = rel.empty() ? name : rel + "/" + name;
        OverlayAction action;
        action.rel_path = rel_path;
        action.layer = label;
        action.source = abs;
        if (fs::is_symlink(abs)) action.kind = OverlayKind::Symlink;
        else if (fs::is_directory(abs)) action.kind = OverlayKind::Directory;
        else action.kind = OverlayKind::File;

        auto prev = plan.winners.find(rel_path);
        if (prev != plan.winners.end() &&
            is_dir_kind(prev->second.kind) != is_dir_kind(action.kind)) {
            throw Error(ErrorKind::Conflict,
                        "overlay type conflict at \"" + rel_path + "\": " +
                            to_string(prev->second.kind) + " from layer " +
                            prev->second.layer + " vs " + to_string(action.kind) +
                            " from layer " + label);
        }
        plan.actions.push_back(action);
        plan.winners[rel_path] = action;
        if (action.kind == OverlayKind::Directory)
            walk_overlay_tree(label, tree, abs, rel_path, plan);
    }
}

} // namespace

OverlayPlan compose_overlay(const std::vector<layers::Layer>& ordered_layers,
                            const std::vector<OverlayRoot>& extra_roots) {
    OverlayPlan plan;
    for (const auto& layer : ordered_layers) {
        if (!layer.has("root_overlay")) continue;
        walk_overlay_tree(layer.id.str(), layer.dir("root_overlay"),
                          layer.dir("root_overlay"), "", plan);
    }
    for (const auto& root : extra_roots) {
        if (!fs::is_directory(root.path)) continue;
        walk_overlay_tree(root.label, root.path, root.path, "", plan);
    }
    return plan;
}

ApplyReport apply_overlay(const OverlayPlan& plan, const fs::path& target) {
    if (!fs::is_directory(target))
        throw Error(ErrorKind::Io, "overlay target is not a directory: " + target.string());
    ApplyReport report;
    try {
        // winners is sorted by path, so parents come before children.
        for (const auto& [rel, action] : plan.winners) {
            fs::path dest = target / fs::path(rel);
            fs::create_directories(dest.parent_path());
            switch (action.kind) {
            case OverlayKind::Directory:
                fs::create_directories(dest);
                break;
            case OverlayKind::File:
                fs::copy_file(action.source, dest, fs::copy_options::overwrite_existing);
                report.files_written += 1;
                report.bytes_written += fs::file_size(dest);
                break;
            case OverlayKind::Symlink: {
                std::error_code ec;
                fs::remove(dest, ec);
                fs::create_symlink(fs::read_symlink(action.source), dest);
                report.files_written += 1;
                break;
            }
            }
            report.winners[rel] = action.layer;
        }
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::Io, "overlay apply failed after " +
                                       std::to_string(report.files_written) +
                                       " files: " + e.what());
    }
    return report;
}

namespace {

struct LabeledFragment {
    std::string label;
    fs::path path;
};

std::vector<LabeledFragment> labeled_fragments(
    const std::vector<layers::Layer>& ordered_layers, kconfig::ConfigClass cls,
    const std::optional<fs::path>& overrides_root, const std::string& workspace) {
    std::vector<LabeledFragment> out;
    const std::string& dir = kconfig::class_dir(cls);
    auto append = [&](const std::string& label, const fs::path& d) {
        for (const auto& name : util::sorted_dir_entries(d)) {
            fs::path p = d / name;
            if (fs::is_regular_file(p)) out.push_back({label, p});
        }
    };
    for (const auto& layer : ordered_layers)
        if (layer.has(dir)) append(layer.id.str(), layer.dir(dir));
    if (overrides_root) {
        append("overrides", *overrides_root / dir);
        append("overrides/workspaces/" + workspace,
               *overrides_root / "workspaces" / workspace / dir);
    }
    return out;
}

} // namespace

BuildPlan build_plan(const layers::Selection& selection, const layers::LayerCatalog& catalog,
                     const std::string& workspace,
                     const std::optional<fs::path>& overrides_root, Diagnostics* diags) {
    if (selection.empty())
        throw Error(ErrorKind::Resolution, "no layers selected");

    BuildPlan plan;
    plan.workspace = workspace;
    plan.selection = selection;
    plan.layer_order = layers::resolve_order(selection, catalog, diags);

    for (auto cls : {kconfig::ConfigClass::Buildroot, kconfig::ConfigClass::Kernel,
                     kconfig::ConfigClass::Uboot}) {
        std::vector<kconfig::KconfigFragment> fragments;
        for (const auto& [label, path] :
             labeled_fragments(plan.layer_order, cls, overrides_root, workspace)) {
            try {
                fragments.push_back(kconfig::parse_fragment_file(path, diags));
            } catch (const Error& e) {
                throw Error(e.kind(), "layer " + label + ", file " + path.string() +
                                          ": " + e.what());
            }
        }
        plan.configs[static_cast<int>(cls)] = kconfig::merge_fragments(fragments);
        plan.patches[static_cast<int>(cls)] =
            collect_patches(plan.layer_order, cls, diags);
    }

    plan.cflags = collect_cflags(plan.layer_order);
    plan.hooks_pre = collect_hooks(plan.layer_order, HookPhase::Pre);
    plan.hooks_post = collect_hooks(plan.layer_order, HookPhase::Post);
    for (const auto& layer : plan.layer_order)
        if (layer.has("buildroot_ext")) plan.external_trees.push_back(layer.dir("buildroot_ext"));

    std::vector<OverlayRoot> extra_roots;
    if (overrides_root) {
        extra_roots.push_back({"overrides", *overrides_root / "root_overlay"});
        extra_roots.push_back({"overrides/workspaces/" + workspace,
                               *overrides_root / "workspaces" / workspace / "root_overlay"});
    }
    plan.overlay = compose_overlay(plan.layer_order, extra_roots);
    return plan;
}

namespace {

json config_to_json(const kconfig::MergedConfig& merged) {
    json arr = json::array();
    for (const auto& entry : merged.entries()) {
        arr.push_back({{"key", entry.key},
                       {"value", entry.value.render()},
                       {"unset", entry.value.kind == kconfig::ValueKind::TristateNoUnset},
                       {"source", entry.winner.str()}});
    }
    return arr;
}

json paths_to_json(const std::vector<fs::path>& paths) {
    json arr = json::array();
    for (const auto& p : paths) arr.push_back(p.string());
    return arr;
}

} // namespace

std::string serialize_plan(const BuildPlan& plan) {
    json j;
    j["workspace"] = plan.workspace;
    j["selection"] = json::array();
    for (const auto& id : plan.selection) j["selection"].push_back(id.str());
    j["layers"] = json::array();
    for (const auto& layer : plan.layer_order) {
        json markers = json::array();
        for (const auto& m : layer.present) markers.push_back(m);
        j["layers"].push_back({{"id", layer.id.str()},
                               {"root", layer.root.string()},
                               {"present", markers}});
    }
    j["configs"] = {{"buildroot", config_to_json(plan.config(kconfig::ConfigClass::Buildroot))},
                    {"kernel", config_to_json(plan.config(kconfig::ConfigClass::Kernel))},
                    {"uboot", config_to_json(plan.config(kconfig::ConfigClass::Uboot))}};
    j["cflags"] = plan.cflags;
    j["patches"] = {
        {"buildroot", paths_to_json(plan.patches[0])},
        {"kernel", paths_to_json(plan.patches[1])},
        {"uboot", paths_to_json(plan.patches[2])}};
    j["external_trees"] = paths_to_json(plan.external_trees);
    j["hooks"] = {{"pre", paths_to_json(plan.hooks_pre)},
                  {"post", paths_to_json(plan.hooks_post)}};

    json actions = json::array();
    for (const auto& a : plan.overlay.actions)
        actions.push_back({{"path", a.rel_path},
                           {"layer", a.layer},
                           {"source", a.source.string()},
                           {"kind", to_string(a.kind)}});
    json winners = json::array();
    for (const auto& [rel, a] : plan.overlay.winners)
        winners.push_back({{"path", rel}, {"layer", a.layer}, {"kind", to_string(a.kind)}});
    j["overlay"] = {{"actions", actions}, {"winners", winners}};

    // nlohmann orders object keys; dump is byte-deterministic.
    return j.dump(2) + "\n";
}

SimulateReport simulate_build(const BuildPlan& plan, const fs::path& output, bool run_hooks) {
    fs::create_directories(output);
    SimulateReport report;

    auto emit = [&](const std::string& name, const std::string& content) {
        util::write_file(output / name, content);
        report.files.push_back(name);
    };
    auto manifest_of = [](const std::vector<fs::path>& paths) {
        std::string text;
        for (const auto& p : paths) text += p.string() + "\n";
        return text;
    };

    emit("buildroot.config", kconfig::render_config(plan.config(kconfig::ConfigClass::Buildroot)));
    emit("kernel.config", kconfig::render_config(plan.config(kconfig::ConfigClass::Kernel)));
    emit("uboot.config", kconfig::render_config(plan.config(kconfig::ConfigClass::Uboot)));

    std::string cflags_text;
    for (const auto& flag : plan.cflags) cflags_text += flag + "\n";
    emit("cflags.txt", cflags_text);

    emit("patches-buildroot.txt", manifest_of(plan.patches[0]));
    emit("patches-kernel.txt", manifest_of(plan.patches[1]));
    emit("patches-uboot.txt", manifest_of(plan.patches[2]));
    emit("hooks-pre.txt", manifest_of(plan.hooks_pre));
    emit("hooks-post.txt", manifest_of(plan.hooks_post));
    emit("external-trees.txt", manifest_of(plan.external_trees));
    emit("plan.json", serialize_plan(plan));

    fs::path overlay_dir = output / "rootfs-overlay";
    fs::remove_all(overlay_dir);
    fs::create_directories(overlay_dir);
    apply_overlay(plan.overlay, overlay_dir);
    report.files.push_back("rootfs-overlay");

    if (run_hooks) {
        auto run = [&](const fs::path& hook) {
            std::string cmd = "'" + hook.string() + "' '" + output.string() + "'";
            int rc = std::system(cmd.c_str());
            report.hook_runs.push_back(hook.string() + " -> " + std::to_string(rc));
            if (rc != 0)
                throw Error(ErrorKind::Io,
                            "hook failed (" + std::to_string(rc) + "): " + hook.string());
        };
        for (const auto& hook : plan.hooks_pre) run(hook);
        for (const auto& hook : plan.hooks_post) run(hook);
    }

    report.tree_digest = digest::tree_digest_hex(output);
    return report;
}

} // namespace skiff::compose
