// Copyright (c) 2026 the skiffc authors
// SPDX-License-Identifier: Apache-2.0

#include "skiff/core.hpp"

#include "skiff/error.hpp"
#include "skiff/util.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <unordered_set>

namespace skiff::core {

const char* to_string(PullPolicy policy) {
    switch (policy) {
    case PullPolicy::IfNotExists: return "ifnotexists";
    case PullPolicy::Always: return "always";
    case PullPolicy::Never: return "never";
    }
    return "ifnotexists";
}

PullPolicy parse_pull_policy(const std::string& text) {
    if (text == "ifnotexists") return PullPolicy::IfNotExists;
    if (text == "always") return PullPolicy::Always;
    if (text == "never") return PullPolicy::Never;
    throw Error(ErrorKind::Validation, "unknown pull policy: " + text);
}

const ContainerSpec* CoreConfig::find_container(const std::string& name) const {
    for (const auto& c : containers)
        if (c.name == name) return &c;
    return nullptr;
}

const UserSpec* CoreConfig::find_user(const std::string& name) const {
    for (const auto& u : users)
        if (u.name == name) return &u;
    return nullptr;
}

const ImageSpec* CoreConfig::find_image(const std::string& ref) const {
    for (const auto& i : images)
        if (i.ref == ref) return &i;
    return nullptr;
}

namespace {

Mount parse_mount(const std::string& text, std::vector<std::string>& violations) {
    auto parts = util::split(text, ':');
    Mount mount;
    if (parts.size() < 2 || parts.size() > 3 || parts[0].empty() || parts[1].empty()) {
        violations.push_back("malformed mount spec \"" + text +
                             "\" (want host:container[:ro])");
        return mount;
    }
    if (parts.size() == 3 && parts[2] != "ro") {
        violations.push_back("mount spec \"" + text + "\": third field must be \"ro\"");
        return mount;
    }
    mount.host = parts[0];
    mount.container = parts[1];
    mount.read_only = parts.size() == 3;
    return mount;
}

void warn_unknown_keys(const YAML::Node& node, const std::string& where,
                       const std::unordered_set<std::string>& known, Diagnostics* diags) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
        std::string key = kv.first.as<std::string>();
        if (!known.count(key))
            diag_warn(diags, "unknown key \"" + key + "\" in " + where + " (preserved)");
    }
}

} // namespace

CoreConfig parse_core_config(const std::string& yaml_text, Diagnostics* diags) {
    YAML::Node doc;
    try {
        doc = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::Parse, std::string("yaml syntax error: ") + e.what());
    }

    CoreConfig config;
    std::vector<std::string> violations;

    try {
        warn_unknown_keys(doc, "document", {"containers", "users", "images"}, diags);

        for (const auto& kv : doc["containers"]) {
            ContainerSpec spec;
            spec.name = kv.first.as<std::string>();
            const YAML::Node& body = kv.second;
            warn_unknown_keys(body, "container " + spec.name, {"image", "mounts"}, diags);
            spec.image = body["image"] ? body["image"].as<std::string>() : "";
            if (spec.image.empty())
                violations.push_back("container " + spec.name + ": missing image");
            for (const auto& m : body["mounts"])
                spec.mounts.push_back(parse_mount(m.as<std::string>(), violations));
            config.containers.push_back(std::move(spec));
        }

        for (const auto& kv : doc["users"]) {
            UserSpec spec;
            spec.name = kv.first.as<std::string>();
            const YAML::Node& body = kv.second;
            warn_unknown_keys(body, "user " + spec.name,
                              {"container", "containerUser", "auth"}, diags);
            spec.container = body["container"] ? body["container"].as<std::string>() : "";
            spec.container_user =
                body["containerUser"] ? body["containerUser"].as<std::string>() : "";
            if (body["auth"]) {
                warn_unknown_keys(body["auth"], "user " + spec.name + " auth",
                                  {"copyRootKeys"}, diags);
                spec.copy_root_keys = body["auth"]["copyRootKeys"] &&
                                      body["auth"]["copyRootKeys"].as<bool>();
            }
            if (spec.container.empty())
                violations.push_back("user " + spec.name + ": missing container");
            if (spec.container_user.empty())
                violations.push_back("user " + spec.name + ": missing containerUser");
            config.users.push_back(std::move(spec));
        }

        for (const auto& kv : doc["images"]) {
            ImageSpec spec;
            spec.ref = kv.first.as<std::string>();
            const YAML::Node& body = kv.second;
            warn_unknown_keys(body, "image " + spec.ref, {"pull", "build"}, diags);
            if (body["pull"] && !body["pull"].IsNull()) {
                warn_unknown_keys(body["pull"], "image " + spec.ref + " pull",
                                  {"policy", "registry"}, diags);
                PullSpec pull;
                if (body["pull"]["policy"]) {
                    try {
                        pull.policy = parse_pull_policy(body["pull"]["policy"].as<std::string>());
                    } catch (const Error& e) {
                        violations.push_back("image " + spec.ref + ": " + e.what());
                    }
                }
                if (body["pull"]["registry"])
                    pull.registry = body["pull"]["registry"].as<std::string>();
                spec.pull = std::move(pull);
            }
            if (body["build"] && !body["build"].IsNull()) {
                warn_unknown_keys(body["build"], "image " + spec.ref + " build", {"source"},
                                  diags);
                BuildSpec build;
                build.source = body["build"]["source"]
                                   ? body["build"]["source"].as<std::string>()
                                   : "";
                if (build.source.empty())
                    violations.push_back("image " + spec.ref + ": build without source");
                spec.build = std::move(build);
            }
            if (!spec.pull && !spec.build)
                violations.push_back("image " + spec.ref + ": neither pull nor build given");
            config.images.push_back(std::move(spec));
        }
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::Parse, std::string("yaml structure error: ") + e.what());
    }

    if (config.users.empty()) violations.push_back("no users defined");
    for (const auto& user : config.users)
        if (!user.container.empty() && !config.find_container(user.container))
            violations.push_back("user " + user.name + " references missing container " +
                                 user.container);

    if (!violations.empty()) {
        std::string joined = "invalid skiff-core config:";
        for (const auto& v : violations) joined += "\n  - " + v;
        throw Error(ErrorKind::Validation, joined);
    }
    return config;
}

AcquisitionDecision resolve_acquisition(const std::string& image_ref, const ImageSpec& spec,
                                        bool local_present, bool pull_available) {
    AcquisitionDecision decision;
    if (spec.pull) {
        switch (spec.pull->policy) {
        case PullPolicy::Always:
            if (pull_available) {
                decision.action = Acquisition::Pull;
                decision.registry = spec.pull->registry;
                return decision;
            }
            break; // pull unavailable: fall back
        case PullPolicy::IfNotExists:
            if (local_present) {
                decision.action = Acquisition::UseLocal;
                return decision;
            }
            if (pull_available) {
                decision.action = Acquisition::Pull;
                decision.registry = spec.pull->registry;
                return decision;
            }
            break; // pull unavailable: fall back
        case PullPolicy::Never:
            break; // pull branch skipped entirely
        }
    }
    // No pull possible: a local image satisfies the need, else build.
    if (local_present) {
        decision.action = Acquisition::UseLocal;
        return decision;
    }
    if (spec.build) {
        decision.action = Acquisition::Build;
        decision.source = spec.build->source;
        return decision;
    }
    decision.action = Acquisition::Fail;
    decision.reason = "image " + image_ref + ": " +
                      (spec.pull ? "pull not possible and no build source"
                                 : "no pull section and no build source");
    return decision;
}

std::pair<std::string, std::string> route_session(const std::string& user,
                                                  const CoreConfig& config) {
    const UserSpec* spec = config.find_user(user);
    if (!spec)
        throw Error(ErrorKind::Resolution, "no container mapping for user \"" + user +
                                               "\": session refused");
    return {spec->container, spec->container_user};
}

const std::vector<std::string> kCreateOptions = {
    "init-pid1",          // image init daemon runs as PID 1 in its PID namespace
    "net-host",           // isolation disabled below this line
    "ipc-host",
    "uts-host",
    "security-unconfined",
    "device-passthrough",
};

const char* kPersistKeysDir = "/mnt/persist/skiff/keys";

std::string SetupStep::str() const {
    switch (kind) {
    case Kind::Pull:
        return "pull " + image + (registry.empty() ? "" : " from " + registry);
    case Kind::Build:
        return "build " + image + " from " + build_source;
    case Kind::Create:
        return "create " + container + " image=" + image +
               " mounts=" + std::to_string(mounts.size()) +
               " options=" + std::to_string(options.size());
    case Kind::Start:
        return "start " + container;
    case Kind::ProvisionUser:
        return "provision-user " + container + "/" + container_user +
               (copy_root_keys ? " copy-root-keys " + keys_source + " -> " + keys_target
                               : "");
    }
    return "";
}

std::vector<SetupStep> plan_setup(const CoreConfig& config, const RuntimeState& state) {
    std::vector<SetupStep> steps;
    std::unordered_set<std::string> acquisition_planned;

    for (const auto& container : config.containers) {
        bool local = state.local_images.count(container.image) > 0;
        if (!acquisition_planned.count(container.image)) {
            const ImageSpec* spec = config.find_image(container.image);
            ImageSpec implicit;
            if (!spec) {
                // Images without an entry default to pull-if-not-exists.
                implicit.ref = container.image;
                implicit.pull = PullSpec{};
                spec = &implicit;
            }
            AcquisitionDecision decision =
                resolve_acquisition(container.image, *spec, local, state.pull_available);
            switch (decision.action) {
            case Acquisition::UseLocal:
                break;
            case Acquisition::Pull: {
                SetupStep step;
                step.kind = SetupStep::Kind::Pull;
                step.image = container.image;
                step.registry = decision.registry;
                steps.push_back(std::move(step));
                acquisition_planned.insert(container.image);
                break;
            }
            case Acquisition::Build: {
                SetupStep step;
                step.kind = SetupStep::Kind::Build;
                step.image = container.image;
                step.build_source = decision.source;
                steps.push_back(std::move(step));
                acquisition_planned.insert(container.image);
                break;
            }
            case Acquisition::Fail:
                throw Error(ErrorKind::Validation, "cannot acquire image: " + decision.reason);
            }
        }

        bool exists = state.existing_containers.count(container.name) > 0;
        bool running = state.running_containers.count(container.name) > 0;
        if (!exists) {
            SetupStep step;
            step.kind = SetupStep::Kind::Create;
            step.container = container.name;
            step.image = container.image;
            step.mounts = container.mounts;
            step.options = kCreateOptions;
            steps.push_back(std::move(step));
        }
        if (!running) {
            SetupStep step;
            step.kind = SetupStep::Kind::Start;
            step.container = container.name;
            steps.push_back(std::move(step));
        }
        if (!exists) {
            // Users are provisioned once, when their container is first created.
            for (const auto& user : config.users) {
                if (user.container != container.name) continue;
                SetupStep step;
                step.kind = SetupStep::Kind::ProvisionUser;
                step.container = container.name;
                step.container_user = user.container_user;
                step.copy_root_keys = user.copy_root_keys;
                if (user.copy_root_keys) {
                    step.keys_source = kPersistKeysDir;
                    step.keys_target =
                        "/home/" + user.container_user + "/.ssh/authorized_keys";
                }
                steps.push_back(std::move(step));
            }
        }
    }
    return steps;
}

class FakeRuntime::CallGuard {
public:
    explicit CallGuard(bool& busy) : busy_(busy) {
        if (busy_) throw std::logic_error("container runtime called concurrently");
        busy_ = true;
    }
    ~CallGuard() { busy_ = false; }

private:
    bool& busy_;
};

void FakeRuntime::pull(const std::string& image, const std::string& registry) {
    CallGuard guard(busy_);
    if (!state_.pull_available)
        throw Error(ErrorKind::Transport, "registry unreachable while pulling " + image);
    state_.local_images.insert(image);
    log_.push_back("pull " + image + (registry.empty() ? "" : " from " + registry));
}

void FakeRuntime::build(const std::string& image, const std::string& source) {
    CallGuard guard(busy_);
    state_.local_images.insert(image);
    log_.push_back("build " + image + " from " + source);
}

void FakeRuntime::create(const std::string& container, const std::string& image,
                         const std::vector<Mount>& mounts,
                         const std::vector<std::string>& options) {
    CallGuard guard(busy_);
    if (!state_.local_images.count(image))
        throw Error(ErrorKind::Validation, "create " + container + ": image not local: " + image);
    if (state_.existing_containers.count(container))
        throw Error(ErrorKind::Validation, "create " + container + ": already exists");
    state_.existing_containers.insert(container);
    log_.push_back("create " + container + " image=" + image +
                   " mounts=" + std::to_string(mounts.size()) +
                   " options=" + std::to_string(options.size()));
}

void FakeRuntime::start(const std::string& container) {
    CallGuard guard(busy_);
    if (!state_.existing_containers.count(container))
        throw Error(ErrorKind::Validation, "start " + container + ": no such container");
    state_.running_containers.insert(container);
    log_.push_back("start " + container);
}

void FakeRuntime::exec(const std::string& container, const std::string& user,
                       const std::vector<std::string>& argv) {
    CallGuard guard(busy_);
    if (!state_.running_containers.count(container))
        throw Error(ErrorKind::Validation, "exec in " + container + ": not running");
    std::string line = "exec " + container + " as " + user + ":";
    for (const auto& arg : argv) line += " " + arg;
    log_.push_back(std::move(line));
}

RuntimeState FakeRuntime::list() {
    CallGuard guard(busy_);
    return state_;
}

void apply_setup(const std::vector<SetupStep>& steps, ContainerRuntime& runtime) {
    for (const auto& step : steps) {
        switch (step.kind) {
        case SetupStep::Kind::Pull:
            runtime.pull(step.image, step.registry);
            break;
        case SetupStep::Kind::Build:
            runtime.build(step.image, step.build_source);
            break;
        case SetupStep::Kind::Create:
            runtime.create(step.container, step.image, step.mounts, step.options);
            break;
        case SetupStep::Kind::Start:
            runtime.start(step.container);
            break;
        case SetupStep::Kind::ProvisionUser:
            runtime.exec(step.container, "root",
                         step.copy_root_keys
                             ? std::vector<std::string>{"provision-user", step.container_user,
                                                        step.keys_source, step.keys_target}
                             : std::vector<std::string>{"provision-user", step.container_user});
            break;
        }
    }
}

} // namespace skiff::core
