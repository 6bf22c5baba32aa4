// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/ota.hpp"

#include "skiff/digest.hpp"
#include "skiff/error.hpp"
#include "skiff/util.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace skiff::ota {

namespace {

constexpr const char* kStatePath = "state";
constexpr const char* kManifestDir = "manifests/";
constexpr const char* kBlobDir = "blobs/";
constexpr const char* kStagingDir = "staging/";
constexpr const char* kLockPath = "staging/lock";
constexpr std::size_t kMaxEntries = 5;

std::string now_rfc3339() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool plain_token(std::string_view text) {
    if (text.empty()) return false;
    return std::none_of(text.begin(), text.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '/';
    });
}

bool hex_digest(std::string_view text) {
    if (text.size() != 64) return false;
    return std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

int role_rank(FileRole role) {
    switch (role) {
    case FileRole::Rootfs: return 0;
    case FileRole::Kernel: return 1;
    case FileRole::Modules: return 2;
    case FileRole::BootExtra: return 3;
    }
    return 3;
}

// Plain filename glob: '*' matches any run, '?' one character.
bool glob_match(std::string_view pattern, std::string_view name) {
    if (pattern.empty()) return name.empty();
    if (pattern[0] == '*') {
        for (size_t i = 0; i <= name.size(); ++i)
            if (glob_match(pattern.substr(1), name.substr(i))) return true;
        return false;
    }
    if (name.empty()) return false;
    if (pattern[0] != '?' && pattern[0] != name[0]) return false;
    return glob_match(pattern.substr(1), name.substr(1));
}

} // namespace

const char* to_string(FileRole role) {
    switch (role) {
    case FileRole::Rootfs: return "rootfs";
    case FileRole::Kernel: return "kernel";
    case FileRole::Modules: return "modules";
    case FileRole::BootExtra: return "boot-extra";
    }
    return "boot-extra";
}

FileRole parse_role(std::string_view text) {
    if (text == "rootfs") return FileRole::Rootfs;
    if (text == "kernel") return FileRole::Kernel;
    if (text == "modules") return FileRole::Modules;
    if (text == "boot-extra") return FileRole::BootExtra;
    throw Error(ErrorKind::Parse, "unknown manifest role: " + std::string(text));
}

std::string render_manifest(const OtaManifest& manifest) {
    std::string out;
    out += "version " + manifest.version + "\n";
    out += "digest-algo " + manifest.algo + "\n";
    if (!manifest.created_at.empty()) out += "created-at " + manifest.created_at + "\n";
    for (const auto& e : manifest.entries)
        out += std::string(to_string(e.role)) + " " + e.filename + " " +
               std::to_string(e.size) + " " + e.digest + "\n";
    return out;
}

std::string render_manifest_canonical(const OtaManifest& manifest) {
    OtaManifest stripped = manifest;
    stripped.created_at.clear();
    return render_manifest(stripped);
}

OtaManifest parse_manifest(const std::string& text) {
    OtaManifest manifest;
    auto lines = util::split_lines(text);
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    size_t n = 0;
    auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::Parse, "manifest line " + std::to_string(n + 1) + ": " + why);
    };
    for (n = 0; n < lines.size(); ++n) {
        std::istringstream in(lines[n]);
        std::string first;
        in >> first;
        if (first == "version") {
            in >> manifest.version;
        } else if (first == "digest-algo") {
            in >> manifest.algo;
        } else if (first == "created-at") {
            in >> manifest.created_at;
        } else {
            ManifestEntry entry;
            entry.role = parse_role(first);
            std::string size_text;
            if (!(in >> entry.filename >> size_text >> entry.digest))
                fail("want: <role> <filename> <size> <digest>");
            std::string extra;
            if (in >> extra) fail("trailing token: " + extra);
            try {
                entry.size = std::stoull(size_text);
            } catch (...) {
                fail("bad size: " + size_text);
            }
            manifest.entries.push_back(std::move(entry));
        }
    }
    if (manifest.version.empty()) throw Error(ErrorKind::Parse, "manifest missing version");
    if (manifest.algo.empty()) throw Error(ErrorKind::Parse, "manifest missing digest-algo");
    return manifest;
}

void validate_manifest(const OtaManifest& manifest, Diagnostics* diags) {
    auto fail = [](const std::string& why) {
        throw Error(ErrorKind::Validation, "invalid manifest: " + why);
    };
    if (!plain_token(manifest.version)) fail("version is not a plain token");
    if (manifest.algo != digest::kAlgoName)
        fail("unsupported digest algorithm: " + manifest.algo);

    size_t rootfs = 0, kernel = 0, core_entries = 0;
    std::set<std::string> filenames;
    for (const auto& e : manifest.entries) {
        if (!plain_token(e.filename)) fail("bad filename: \"" + e.filename + "\"");
        if (!hex_digest(e.digest)) fail("bad digest for " + e.filename);
        if (!filenames.insert(e.filename).second) fail("duplicate filename: " + e.filename);
        if (e.role == FileRole::Rootfs) ++rootfs;
        if (e.role == FileRole::Kernel) ++kernel;
        if (e.role != FileRole::BootExtra) ++core_entries;
    }
    if (rootfs != 1) fail("role rootfs must appear exactly once");
    if (kernel != 1) fail("role kernel must appear exactly once");
    if (core_entries > kMaxEntries)
        fail("more than " + std::to_string(kMaxEntries) + " core image files");
    if (manifest.entries.size() > kMaxEntries)
        diag_warn(diags, "manifest has " + std::to_string(manifest.entries.size()) +
                             " entries; boot-extra files exceed the " +
                             std::to_string(kMaxEntries) + "-file image set");
}

const RolePatterns& default_role_patterns() {
    static const RolePatterns patterns = {
        {FileRole::Modules, "modules.squashfs"},
        {FileRole::Rootfs, "rootfs.squashfs"},
        {FileRole::Rootfs, "rootfs.cpio*"},
        {FileRole::Rootfs, "initramfs*"},
        {FileRole::Kernel, "kernel*"},
        {FileRole::Kernel, "*Image"},
        {FileRole::Kernel, "zImage*"},
        {FileRole::BootExtra, "boot.*"},
        {FileRole::BootExtra, "*.dtb"},
        {FileRole::BootExtra, "config.txt"},
        {FileRole::BootExtra, "cmdline.txt"},
    };
    return patterns;
}

OtaManifest build_manifest(const fs::path& image_dir, const std::string& version,
                           const RolePatterns& patterns,
                           std::optional<std::string> created_at, Diagnostics* diags) {
    if (!fs::is_directory(image_dir))
        throw Error(ErrorKind::Io, "image directory not found: " + image_dir.string());

    OtaManifest manifest;
    manifest.version = version;
    manifest.algo = digest::kAlgoName;
    manifest.created_at = created_at ? *created_at : now_rfc3339();

    for (const auto& name : util::sorted_dir_entries(image_dir)) {
        fs::path p = image_dir / name;
        if (!fs::is_regular_file(p)) continue;
        auto match = std::find_if(patterns.begin(), patterns.end(), [&](const auto& rp) {
            return glob_match(rp.second, name);
        });
        if (match == patterns.end()) {
            diag_note(diags, "ignoring unrecognized file: " + name);
            continue;
        }
        ManifestEntry entry;
        entry.role = match->first;
        entry.filename = name;
        entry.size = fs::file_size(p);
        entry.digest = digest::sha256_file_hex(p);
        manifest.entries.push_back(std::move(entry));
    }

    std::stable_sort(manifest.entries.begin(), manifest.entries.end(),
                     [](const ManifestEntry& a, const ManifestEntry& b) {
                         if (role_rank(a.role) != role_rank(b.role))
                             return role_rank(a.role) < role_rank(b.role);
                         return a.filename < b.filename;
                     });
    validate_manifest(manifest, diags);
    return manifest;
}

// ---------------------------------------------------------------------------
// Transports

bool InMemoryTransport::exists(const std::string& path) {
    return files_.count(path) > 0;
}

std::vector<std::string> InMemoryTransport::list(const std::string& prefix) {
    std::vector<std::string> out;
    for (const auto& [path, _] : files_)
        if (util::starts_with(path, prefix)) out.push_back(path);
    return out;
}

std::string InMemoryTransport::read(const std::string& path) {
    auto it = files_.find(path);
    if (it == files_.end())
        throw Error(ErrorKind::Transport, "no such file on target: " + path);
    return it->second;
}

void InMemoryTransport::write_staging(const std::string& path, std::string_view bytes) {
    if (!util::starts_with(path, kStagingDir))
        throw Error(ErrorKind::Transport, "writes must land in staging/: " + path);
    files_[path] = std::string(bytes);
    bytes_written_ += bytes.size();
}

void InMemoryTransport::atomic_commit(const std::string& staged_path,
                                      const std::string& final_path) {
    auto it = files_.find(staged_path);
    if (it == files_.end())
        throw Error(ErrorKind::Transport, "staged file missing: " + staged_path);
    files_[final_path] = std::move(it->second);
    files_.erase(it);
}

void InMemoryTransport::remove(const std::string& path) {
    files_.erase(path);
}

std::string InMemoryTransport::digest(const std::string& path) {
    return digest::sha256_hex(read(path));
}

LocalDirTransport::LocalDirTransport(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

fs::path LocalDirTransport::resolve(const std::string& path) const {
    if (path.empty() || path[0] == '/' || path.find("..") != std::string::npos)
        throw Error(ErrorKind::Transport, "bad target path: " + path);
    return root_ / path;
}

bool LocalDirTransport::exists(const std::string& path) {
    return fs::exists(resolve(path));
}

std::vector<std::string> LocalDirTransport::list(const std::string& prefix) {
    std::vector<std::string> out;
    fs::path dir = resolve(prefix.empty() ? std::string(".") : prefix);
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            out.push_back(fs::relative(entry.path(), root_).generic_string());
    std::sort(out.begin(), out.end());
    return out;
}

std::string LocalDirTransport::read(const std::string& path) {
    fs::path p = resolve(path);
    if (!fs::is_regular_file(p))
        throw Error(ErrorKind::Transport, "no such file on target: " + path);
    return util::read_file(p);
}

void LocalDirTransport::write_staging(const std::string& path, std::string_view bytes) {
    if (!util::starts_with(path, kStagingDir))
        throw Error(ErrorKind::Transport, "writes must land in staging/: " + path);
    fs::path p = resolve(path);
    fs::create_directories(p.parent_path());
    util::write_file(p, bytes);
    bytes_written_ += bytes.size();
}

void LocalDirTransport::atomic_commit(const std::string& staged_path,
                                      const std::string& final_path) {
    fs::path from = resolve(staged_path);
    fs::path to = resolve(final_path);
    if (!fs::exists(from))
        throw Error(ErrorKind::Transport, "staged file missing: " + staged_path);
    fs::create_directories(to.parent_path());
    std::error_code ec;
    fs::rename(from, to, ec); // atomic within one filesystem
    if (ec)
        throw Error(ErrorKind::Transport,
                    "commit rename failed: " + staged_path + " -> " + final_path + ": " +
                        ec.message());
}

void LocalDirTransport::remove(const std::string& path) {
    std::error_code ec;
    fs::remove(resolve(path), ec);
}

std::string LocalDirTransport::digest(const std::string& path) {
    fs::path p = resolve(path);
    if (!fs::is_regular_file(p))
        throw Error(ErrorKind::Transport, "no such file on target: " + path);
    return digest::sha256_file_hex(p);
}

// ---------------------------------------------------------------------------
// Protocol

const char* to_string(PushPhase phase) {
    switch (phase) {
    case PushPhase::Locked: return "locked";
    case PushPhase::Staged: return "staged";
    case PushPhase::VerifiedStaging: return "verified-staging";
    case PushPhase::PromotedBlobs: return "promoted-blobs";
    case PushPhase::WroteManifest: return "wrote-manifest";
    case PushPhase::SwappedState: return "swapped-state";
    case PushPhase::CleanedUp: return "cleaned-up";
    }
    return "";
}

namespace {

struct StateRecord {
    std::optional<std::string> active;   // manifest filename under manifests/
    std::optional<std::string> previous;
};

StateRecord read_state(Transport& t) {
    StateRecord record;
    if (!t.exists(kStatePath)) return record;
    for (const auto& line : util::split_lines(t.read(kStatePath))) {
        std::istringstream in(line);
        std::string key, value;
        if (!(in >> key >> value)) continue;
        if (key == "active") record.active = value;
        else if (key == "previous") record.previous = value;
    }
    return record;
}

std::string render_state(const StateRecord& record) {
    std::string out;
    if (record.active) out += "active " + *record.active + "\n";
    if (record.previous) out += "previous " + *record.previous + "\n";
    return out;
}

std::optional<OtaManifest> load_manifest_record(Transport& t,
                                                const std::optional<std::string>& name) {
    if (!name || !t.exists(kManifestDir + *name)) return std::nullopt;
    return parse_manifest(t.read(kManifestDir + *name));
}

std::string manifest_record_name(const OtaManifest& manifest) {
    return manifest.version + ".manifest";
}

// Advisory staging lock. Released on scope exit; a hard crash leaves it in
// place, which is exactly what an interrupted session should look like.
class StagingLock {
public:
    explicit StagingLock(Transport& t) : transport_(t) {
        if (transport_.exists(kLockPath))
            throw Error(ErrorKind::Transport,
                        "another update session holds the staging lock");
        transport_.write_staging(kLockPath, "locked\n");
    }
    ~StagingLock() {
        try {
            transport_.remove(kLockPath);
        } catch (...) {
            // crash path: transport already gone, lock stays behind
        }
    }

private:
    Transport& transport_;
};

void purge_staging(Transport& t) {
    for (const auto& path : t.list(kStagingDir))
        if (path != kLockPath) t.remove(path);
}

// Drops manifests and blobs not referenced by the state record.
void collect_garbage(Transport& t, const StateRecord& state) {
    std::set<std::string> keep_manifests;
    std::set<std::string> keep_blobs;
    for (const auto& name : {state.active, state.previous}) {
        if (!name) continue;
        keep_manifests.insert(kManifestDir + *name);
        if (auto manifest = load_manifest_record(t, name))
            for (const auto& e : manifest->entries) keep_blobs.insert(kBlobDir + e.digest);
    }
    for (const auto& path : t.list(kManifestDir))
        if (!keep_manifests.count(path)) t.remove(path);
    for (const auto& path : t.list(kBlobDir))
        if (!keep_blobs.count(path)) t.remove(path);
    purge_staging(t);
}

} // namespace

PushReport push_update(const OtaManifest& manifest, const fs::path& source_dir,
                       Transport& transport, const PushOptions& options) {
    validate_manifest(manifest);
    auto at_phase = [&](PushPhase phase) {
        if (options.phase_hook) options.phase_hook(phase);
    };

    PushReport report;
    report.version = manifest.version;

    StateRecord state = read_state(transport);
    if (auto active = load_manifest_record(transport, state.active)) {
        if (render_manifest_canonical(*active) == render_manifest_canonical(manifest)) {
            report.up_to_date = true;
            return report;
        }
    }

    StagingLock lock(transport);
    purge_staging(transport); // leftovers from an interrupted session
    at_phase(PushPhase::Locked);

    // Stage every blob the target does not already have.
    std::vector<std::string> staged_digests;
    for (const auto& entry : manifest.entries) {
        if (transport.exists(kBlobDir + entry.digest)) {
            report.files_skipped += 1;
            continue;
        }
        fs::path source = source_dir / entry.filename;
        if (!fs::is_regular_file(source))
            throw Error(ErrorKind::Io, "source file missing: " + source.string());
        std::string bytes = util::read_file(source);
        if (digest::sha256_hex(bytes) != entry.digest)
            throw Error(ErrorKind::Validation,
                        "source file no longer matches manifest digest: " + entry.filename);
        transport.write_staging(std::string(kStagingDir) + "blob-" + entry.digest, bytes);
        report.files_transferred += 1;
        report.bytes_transferred += bytes.size();
        staged_digests.push_back(entry.digest);
    }
    at_phase(PushPhase::Staged);

    // Re-check digests target-side; a mismatch aborts with staging purged.
    for (const auto& d : staged_digests) {
        if (transport.digest(std::string(kStagingDir) + "blob-" + d) != d) {
            purge_staging(transport);
            throw Error(ErrorKind::Transport,
                        "staged content failed digest verification: " + d);
        }
    }
    at_phase(PushPhase::VerifiedStaging);

    // Promote staged blobs into content-addressed storage. These renames do
    // not affect what the active manifest resolves to.
    for (const auto& d : staged_digests)
        transport.atomic_commit(std::string(kStagingDir) + "blob-" + d, kBlobDir + d);
    at_phase(PushPhase::PromotedBlobs);

    // Write the manifest record for the new version.
    std::string record_name = manifest_record_name(manifest);
    if (transport.exists(kManifestDir + record_name)) {
        OtaManifest existing = parse_manifest(transport.read(kManifestDir + record_name));
        if (render_manifest_canonical(existing) != render_manifest_canonical(manifest))
            throw Error(ErrorKind::Validation,
                        "version " + manifest.version +
                            " already on target with different content");
    } else {
        transport.write_staging(std::string(kStagingDir) + "manifest.new",
                                render_manifest(manifest));
        transport.atomic_commit(std::string(kStagingDir) + "manifest.new",
                                kManifestDir + record_name);
    }
    at_phase(PushPhase::WroteManifest);

    // Single-rename commit point: active/previous flip together.
    StateRecord next;
    next.active = record_name;
    next.previous = state.active;
    transport.write_staging(std::string(kStagingDir) + "state.new", render_state(next));
    transport.atomic_commit(std::string(kStagingDir) + "state.new", kStatePath);
    at_phase(PushPhase::SwappedState);

    collect_garbage(transport, next);
    at_phase(PushPhase::CleanedUp);
    return report;
}

VerificationReport verify_target(Transport& transport) {
    VerificationReport report;
    StateRecord state = read_state(transport);
    auto active = load_manifest_record(transport, state.active);
    if (!active) return report; // no active manifest
    report.has_active = true;
    report.version = active->version;
    for (const auto& entry : active->entries) {
        VerifyEntry v;
        v.filename = entry.filename;
        v.role = entry.role;
        std::string blob = kBlobDir + entry.digest;
        if (!transport.exists(blob)) {
            v.ok = false;
            v.detail = "missing blob";
        } else {
            std::string actual = transport.digest(blob);
            v.ok = actual == entry.digest;
            if (!v.ok) v.detail = "digest mismatch: " + actual;
        }
        report.entries.push_back(std::move(v));
    }
    return report;
}

RollbackReport rollback(Transport& transport) {
    StateRecord state = read_state(transport);
    auto active = load_manifest_record(transport, state.active);
    auto previous = load_manifest_record(transport, state.previous);
    if (!previous)
        throw Error(ErrorKind::Validation, "no previous manifest to roll back to");

    StagingLock lock(transport);
    purge_staging(transport);

    StateRecord next;
    next.active = state.previous;
    next.previous = state.active;
    transport.write_staging(std::string(kStagingDir) + "state.new", render_state(next));
    transport.atomic_commit(std::string(kStagingDir) + "state.new", kStatePath);

    collect_garbage(transport, next);
    return {active ? active->version : "", previous->version};
}

TargetState read_target_state(Transport& transport) {
    StateRecord state = read_state(transport);
    TargetState out;
    out.active = load_manifest_record(transport, state.active);
    out.previous = load_manifest_record(transport, state.previous);
    return out;
}

} // namespace skiff::ota
