// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "skiff/diagnostics.hpp"

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace skiff::core {

struct Mount {
    std::string host;
    std::string container;
    bool read_only = false;

    std::string str() const {
        return host + ":" + container + (read_only ? ":ro" : "");
    }
    bool operator==(const Mount&) const = default;
};

struct ContainerSpec {
    std::string name;
    std::string image;
    std::vector<Mount> mounts;
};

struct UserSpec {
    std::string name;
    std::string container;
    std::string container_user;
    bool copy_root_keys = false;
};

enum class PullPolicy { IfNotExists, Always, Never };

const char* to_string(PullPolicy policy);
PullPolicy parse_pull_policy(const std::string& text);

struct PullSpec {
    PullPolicy policy = PullPolicy::IfNotExists;
    std::string registry; // optional
};

struct BuildSpec {
    std::string source; // directory with the Dockerfile
};

struct ImageSpec {
    std::string ref;
    std::optional<PullSpec> pull;
    std::optional<BuildSpec> build;
};

// Document order is preserved so plans are deterministic.
struct CoreConfig {
    std::vector<ContainerSpec> containers;
    std::vector<UserSpec> users;
    std::vector<ImageSpec> images;

    const ContainerSpec* find_container(const std::string& name) const;
    const UserSpec* find_user(const std::string& name) const;
    const ImageSpec* find_image(const std::string& ref) const;
};

// Parses and validates skiff-core.yaml. Unknown keys are reported as
// warnings; invariant violations are collected and thrown together.
CoreConfig parse_core_config(const std::string& yaml_text, Diagnostics* diags = nullptr);

enum class Acquisition { UseLocal, Pull, Build, Fail };

struct AcquisitionDecision {
    Acquisition action = Acquisition::Fail;
    std::string registry; // for Pull
    std::string source;   // for Build
    std::string reason;   // for Fail
};

// Pure decision: local image beats pulling under ifnotexists; a "never" or
// absent pull section skips pulling entirely; unavailable pulls fall back to
// building when a build source exists.
AcquisitionDecision resolve_acquisition(const std::string& image_ref, const ImageSpec& spec,
                                        bool local_present, bool pull_available);

// Session routing is a pure lookup of (container, containerUser).
std::pair<std::string, std::string> route_session(const std::string& user,
                                                  const CoreConfig& config);

// Creation options recorded on every create step: the init daemon runs as
// PID 1 inside its own PID namespace, and most other isolation is disabled.
extern const std::vector<std::string> kCreateOptions;

// Where copyRootKeys provisioning reads from and writes to.
extern const char* kPersistKeysDir;

struct SetupStep {
    enum class Kind { Pull, Build, Create, Start, ProvisionUser };
    Kind kind;
    std::string image;                // Pull/Build/Create
    std::string registry;             // Pull
    std::string build_source;         // Build
    std::string container;            // Create/Start/ProvisionUser
    std::vector<Mount> mounts;        // Create
    std::vector<std::string> options; // Create
    std::string container_user;       // ProvisionUser
    bool copy_root_keys = false;      // ProvisionUser
    std::string keys_source;          // ProvisionUser, when copy_root_keys
    std::string keys_target;          // ProvisionUser, when copy_root_keys

    std::string str() const;
};

struct RuntimeState {
    std::set<std::string> local_images;
    std::set<std::string> existing_containers;
    std::set<std::string> running_containers;
    bool pull_available = true;
};

// Ordered convergence plan: per container an acquisition step when the image
// is missing, create when absent, start when stopped, and user provisioning
// for freshly created containers. A converged state plans to nothing.
std::vector<SetupStep> plan_setup(const CoreConfig& config, const RuntimeState& state);

// Abstract container runtime; calls must be serialized.
class ContainerRuntime {
public:
    virtual ~ContainerRuntime() = default;
    virtual void pull(const std::string& image, const std::string& registry) = 0;
    virtual void build(const std::string& image, const std::string& source) = 0;
    virtual void create(const std::string& container, const std::string& image,
                        const std::vector<Mount>& mounts,
                        const std::vector<std::string>& options) = 0;
    virtual void start(const std::string& container) = 0;
    virtual void exec(const std::string& container, const std::string& user,
                      const std::vector<std::string>& argv) = 0;
    virtual RuntimeState list() = 0;
};

// In-memory runtime used by tests and demos. Rejects re-entrant calls.
class FakeRuntime : public ContainerRuntime {
public:
    FakeRuntime() = default;
    explicit FakeRuntime(RuntimeState state) : state_(std::move(state)) {}

    void pull(const std::string& image, const std::string& registry) override;
    void build(const std::string& image, const std::string& source) override;
    void create(const std::string& container, const std::string& image,
                const std::vector<Mount>& mounts,
                const std::vector<std::string>& options) override;
    void start(const std::string& container) override;
    void exec(const std::string& container, const std::string& user,
              const std::vector<std::string>& argv) override;
    RuntimeState list() override;

    const std::vector<std::string>& log() const { return log_; }

private:
    class CallGuard;
    RuntimeState state_;
    std::vector<std::string> log_;
    bool busy_ = false;
};

// Executes a plan against a runtime, in order.
void apply_setup(const std::vector<SetupStep>& steps, ContainerRuntime& runtime);

} // namespace skiff::core
