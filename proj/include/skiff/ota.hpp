// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "skiff/diagnostics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skiff::ota {

enum class FileRole { Rootfs, Kernel, Modules, BootExtra };

const char* to_string(FileRole role);
FileRole parse_role(std::string_view text);

struct ManifestEntry {
    FileRole role = FileRole::BootExtra;
    std::string filename; // single token, no slashes or whitespace
    std::uint64_t size = 0;
    std::string digest; // hex
};

// Versioned description of the small immutable image file set.
//
// Canonical text form (bit-exact, trailing newline):
//   version <token>
//   digest-algo <name>
//   created-at <rfc3339>            (optional; excluded from comparisons)
//   <role> <filename> <size> <digest>
struct OtaManifest {
    std::string version;
    std::string algo; // digest::kAlgoName
    std::string created_at;
    std::vector<ManifestEntry> entries;
};

std::string render_manifest(const OtaManifest& manifest);
// Without the created-at line; two manifests are "the same" when their
// canonical renderings are byte-equal.
std::string render_manifest_canonical(const OtaManifest& manifest);
OtaManifest parse_manifest(const std::string& text);

// Invariants: rootfs and kernel exactly once; at most 5 entries, where
// boot-extra entries past the limit are tolerated with a warning.
void validate_manifest(const OtaManifest& manifest, Diagnostics* diags = nullptr);

// Filename glob patterns that assign roles during manifest building.
using RolePatterns = std::vector<std::pair<FileRole, std::string>>;
const RolePatterns& default_role_patterns();

// Scans image_dir for role files and computes sizes and digests. Entries are
// ordered by role then filename. created_at defaults to the current UTC time.
OtaManifest build_manifest(const std::filesystem::path& image_dir, const std::string& version,
                           const RolePatterns& patterns = default_role_patterns(),
                           std::optional<std::string> created_at = {},
                           Diagnostics* diags = nullptr);

// Byte-level access to a target. Writes land in staging/ only; the one
// mutation that changes visible state is the atomic rename of a staged file
// onto its final path. digest() is computed target-side (rsync-style).
class Transport {
public:
    virtual ~Transport() = default;
    virtual bool exists(const std::string& path) = 0;
    virtual std::vector<std::string> list(const std::string& prefix) = 0;
    virtual std::string read(const std::string& path) = 0;
    virtual void write_staging(const std::string& path, std::string_view bytes) = 0;
    virtual void atomic_commit(const std::string& staged_path,
                               const std::string& final_path) = 0;
    virtual void remove(const std::string& path) = 0;
    virtual std::string digest(const std::string& path) = 0;
    virtual std::uint64_t bytes_written() const = 0;
};

class InMemoryTransport : public Transport {
public:
    bool exists(const std::string& path) override;
    std::vector<std::string> list(const std::string& prefix) override;
    std::string read(const std::string& path) override;
    void write_staging(const std::string& path, std::string_view bytes) override;
    void atomic_commit(const std::string& staged_path, const std::string& final_path) override;
    void remove(const std::string& path) override;
    std::string digest(const std::string& path) override;
    std::uint64_t bytes_written() const override { return bytes_written_; }

    // Test access to raw target state.
    std::map<std::string, std::string>& files() { return files_; }

private:
    std::map<std::string, std::string> files_;
    std::uint64_t bytes_written_ = 0;
};

class LocalDirTransport : public Transport {
public:
    explicit LocalDirTransport(std::filesystem::path root);

    bool exists(const std::string& path) override;
    std::vector<std::string> list(const std::string& prefix) override;
    std::string read(const std::string& path) override;
    void write_staging(const std::string& path, std::string_view bytes) override;
    void atomic_commit(const std::string& staged_path, const std::string& final_path) override;
    void remove(const std::string& path) override;
    std::string digest(const std::string& path) override;
    std::uint64_t bytes_written() const override { return bytes_written_; }

private:
    std::filesystem::path resolve(const std::string& path) const;
    std::filesystem::path root_;
    std::uint64_t bytes_written_ = 0;
};

// Protocol phases, in order. A push that completes crosses all of them; the
// hook fires after each, which is where crash-injection tests cut the line.
enum class PushPhase {
    Locked,
    Staged,
    VerifiedStaging,
    PromotedBlobs,
    WroteManifest,
    SwappedState, // the commit point has passed
    CleanedUp,
};

const char* to_string(PushPhase phase);

struct PushOptions {
    std::function<void(PushPhase)> phase_hook;
};

struct PushReport {
    bool up_to_date = false;
    std::uint64_t files_transferred = 0;
    std::uint64_t bytes_transferred = 0;
    std::uint64_t files_skipped = 0; // digest already present on target
    std::string version;
};

// Stage-verify-commit. All content lands under staging/ first, staged digests
// are re-checked target-side, blobs are promoted into content-addressed
// storage, and a single rename of the state record flips active/previous.
// The previous image set is retained for rollback; blobs whose digest is
// already on the target are skipped.
PushReport push_update(const OtaManifest& manifest, const std::filesystem::path& source_dir,
                       Transport& transport, const PushOptions& options = {});

struct VerifyEntry {
    std::string filename;
    FileRole role = FileRole::BootExtra;
    bool ok = false;
    std::string detail;
};

struct VerificationReport {
    bool has_active = false;
    std::string version;
    std::vector<VerifyEntry> entries;

    bool all_ok() const {
        for (const auto& e : entries)
            if (!e.ok) return false;
        return has_active;
    }
};

// Re-hashes on-target blobs against the active manifest.
VerificationReport verify_target(Transport& transport);

struct RollbackReport {
    std::string from_version;
    std::string to_version;
};

// Atomically swaps previous back to active (same single-rename commit);
// the former active becomes previous.
RollbackReport rollback(Transport& transport);

// Target state as recorded on the device; test and CLI introspection.
struct TargetState {
    std::optional<OtaManifest> active;
    std::optional<OtaManifest> previous;
};

TargetState read_target_state(Transport& transport);

} // namespace skiff::ota
