#include "nndse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "nndse/errors.hpp"
#include "nndse/rng.hpp"

namespace nndse {

namespace {

int rounded_value(const SpaceLayout& layout, const CandidateConfig& config, std::size_t slot) {
    return std::max(1, static_cast<int>(std::lround(layout.value_at(config, slot))));
}

} // namespace

Topology build_topology(const SpaceLayout& layout, const CandidateConfig& config,
                        const InputShape& input, int num_classes) {
    layout.require_valid(config);
    Topology t;
    t.input = input;
    t.output_nodes = num_classes;

    // Collect per-layer values keyed by template name.
    std::map<int, ConvLayerSpec> conv;
    std::map<int, int> fc;
    for (std::size_t i = 0; i < layout.slot_count(); ++i) {
        const SlotInfo& s = layout.slot(i);
        if (s.group < 0 || config.idx[i] == CandidateConfig::kAbsent) continue;
        const std::string& base = s.spec->name;
        if (base == "conv_filters")
            conv[s.layer].filters = rounded_value(layout, config, i);
        else if (base == "conv_kernel")
            conv[s.layer].kernel = rounded_value(layout, config, i);
        else if (base == "conv_pool")
            conv[s.layer].pool = rounded_value(layout, config, i);
        else if (base == "fc_nodes")
            fc[s.layer] = rounded_value(layout, config, i);
    }
    for (auto& [layer, spec] : conv) t.conv_layers.push_back(spec);
    for (auto& [layer, nodes] : fc) t.fc_layers.push_back(nodes);

    // Validates spatial feasibility as a side effect.
    (void)cnn_counts(t);
    return t;
}

TrainHyper hyper_for(const SpaceLayout& layout, const CandidateConfig& config,
                     const TrainDefaults& defaults) {
    TrainHyper h;
    h.batch_size = defaults.batch_size;
    h.epochs = defaults.epochs;
    h.activation = activation_from_string(defaults.activation);
    if (auto slot = layout.slot_index("learning_rate"))
        h.learning_rate = layout.value_at(config, *slot);
    if (auto slot = layout.slot_index("activation")) {
        int v = config.idx[*slot];
        if (v != CandidateConfig::kAbsent)
            h.activation = activation_from_string(layout.slot(*slot).spec->options[v]);
    }
    return h;
}

double synthetic_error(const SpaceLayout& layout, const CandidateConfig& config) {
    std::vector<double> x = layout.encode(config);

    std::optional<std::size_t> lr_slot = layout.slot_index("learning_rate");
    int lr_offset = lr_slot ? layout.slot(*lr_slot).encode_offset : -1;

    double capacity = 0.0;
    int capacity_ordinal = 0;
    double cat_term = 0.0;
    for (std::size_t i = 0; i < layout.slot_count(); ++i) {
        const SlotInfo& s = layout.slot(i);
        if (s.is_gate) continue;
        if (s.spec->kind == ParamKind::numeric) {
            if (s.encode_offset == lr_offset) continue;
            capacity += x[s.encode_offset] / (1.0 + 0.3 * capacity_ordinal);
            ++capacity_ordinal;
        } else {
            int chosen = config.idx[i];
            std::size_t k = s.spec->options.size();
            if (chosen != CandidateConfig::kAbsent && k > 1)
                cat_term += 0.015 * static_cast<double>(chosen) / static_cast<double>(k - 1);
        }
    }

    double texture_arg = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) texture_arg += (11.3 + 7.7 * j) * x[j];

    double error = 0.02 + 0.9 * std::exp(-1.8 * capacity) * (1.0 + 0.06 * std::sin(texture_arg)) +
                   cat_term;
    if (lr_offset >= 0) {
        double f = x[lr_offset];
        double l = std::log(f / 0.25);
        error += 0.03 * l * l;
    }
    return std::clamp(error, 0.0, 1.0);
}

EvaluationResult SyntheticEvaluator::evaluate(const CandidateConfig& config) {
    EvaluationResult r;
    r.error = synthetic_error(layout_, config);
    return r;
}

ToyTrainerEvaluator::ToyTrainerEvaluator(const SpaceLayout& layout, const Dataset& dataset,
                                         EvalTarget target, std::uint64_t seed)
    : layout_(layout), dataset_(dataset), target_(std::move(target)), seed_(seed) {}

EvaluationResult ToyTrainerEvaluator::evaluate(const CandidateConfig& config) {
    Topology t = build_topology(layout_, config, target_.input, target_.num_classes);
    TrainHyper h = hyper_for(layout_, config, target_.train);
    std::string key = layout_.canonical_key(config);
    Rng rng(fnv1a64(key, seed_ ^ 1469598103934665603ull));
    try {
        return train_and_test(t, h, dataset_, rng);
    } catch (const DivergenceError& e) {
        EvaluationResult r;
        r.error = 1.0;
        r.metadata["diverged"] = "1";
        r.metadata["diverged_epoch"] = std::to_string(e.epoch);
        return r;
    }
}

// ---------------------------------------------------------------------------
// External process plumbing

struct ExternalEvaluator::Child {
    pid_t pid = -1;
    int to_child = -1;   // write end
    int from_child = -1; // read end
    std::string buffer;

    ~Child() { stop(); }

    void stop() {
        if (to_child >= 0) close(to_child);
        if (from_child >= 0) close(from_child);
        to_child = from_child = -1;
        if (pid > 0) {
            kill(pid, SIGTERM);
            int status = 0;
            waitpid(pid, &status, 0);
            pid = -1;
        }
    }

    bool alive() const { return pid > 0; }
};

ExternalEvaluator::ExternalEvaluator(const SpaceLayout& layout, std::string command,
                                     double timeout_seconds)
    : layout_(layout), command_(std::move(command)), timeout_(timeout_seconds) {}

ExternalEvaluator::~ExternalEvaluator() = default;

void ExternalEvaluator::ensure_child() {
    if (child_ && child_->alive()) return;
    child_ = std::make_unique<Child>();

    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw EvaluatorError("external: pipe() failed");
    pid_t pid = fork();
    if (pid < 0) throw EvaluatorError("external: fork() failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    child_->pid = pid;
    child_->to_child = in_pipe[1];
    child_->from_child = out_pipe[0];
}

EvaluationResult ExternalEvaluator::evaluate(const CandidateConfig& config) {
    ensure_child();

    std::ostringstream req;
    req << "eval " << layout_.canonical_key(config);
    for (std::size_t i = 0; i < layout_.slot_count(); ++i) {
        const SlotInfo& s = layout_.slot(i);
        int v = config.idx[i];
        req << ' ' << s.name << '=';
        if (v == CandidateConfig::kAbsent)
            req << '-';
        else if (s.spec->kind == ParamKind::numeric)
            req << v;
        else
            req << s.spec->options[v];
    }
    std::vector<double> enc = layout_.encode(config);
    req << " encoded=";
    req.precision(17);
    for (std::size_t i = 0; i < enc.size(); ++i) req << (i ? "," : "") << enc[i];
    req << '\n';

    std::string line = req.str();
    ssize_t written = write(child_->to_child, line.data(), line.size());
    if (written != static_cast<ssize_t>(line.size())) {
        child_->stop();
        throw EvaluatorError("external: failed to write request (process gone?)");
    }

    // Read one response line, honoring the timeout.
    auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_);
    std::string& buf = child_->buffer;
    std::size_t nl;
    while ((nl = buf.find('\n')) == std::string::npos) {
        auto remain = deadline - std::chrono::steady_clock::now();
        int ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(remain).count());
        if (ms <= 0) {
            child_->stop();
            throw EvaluatorError("external: timeout after " + std::to_string(timeout_) + "s");
        }
        pollfd pfd{child_->from_child, POLLIN, 0};
        int pr = poll(&pfd, 1, ms);
        if (pr <= 0) {
            child_->stop();
            throw EvaluatorError("external: timeout waiting for response");
        }
        char chunk[4096];
        ssize_t got = read(child_->from_child, chunk, sizeof chunk);
        if (got <= 0) {
            child_->stop();
            throw EvaluatorError("external: process closed its output");
        }
        buf.append(chunk, static_cast<std::size_t>(got));
    }
    std::string response = buf.substr(0, nl);
    buf.erase(0, nl + 1);

    std::istringstream rs(response);
    std::string tag;
    rs >> tag;
    if (tag == "err") {
        std::string msg;
        std::getline(rs, msg);
        throw EvaluatorError("external: evaluator reported:" + msg);
    }
    if (tag != "ok") throw EvaluatorError("external: malformed response '" + response + "'");

    EvaluationResult r;
    bool have_error = false;
    std::string kv;
    while (rs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw EvaluatorError("external: malformed field '" + kv + "'");
        std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "error") {
            try {
                r.error = std::stod(v);
            } catch (const std::exception&) {
                throw EvaluatorError("external: bad error value '" + v + "'");
            }
            have_error = true;
        } else {
            r.metadata[k] = v;
        }
    }
    if (!have_error) throw EvaluatorError("external: response missing error=");
    if (!(r.error >= 0.0 && r.error <= 1.0))
        throw EvaluatorError("external: error " + std::to_string(r.error) + " outside [0, 1]");
    return r;
}

// ---------------------------------------------------------------------------

CachedEvaluator::CachedEvaluator(const SpaceLayout& layout, Evaluator& inner,
                                 std::optional<std::filesystem::path> cache_file)
    : layout_(layout), inner_(inner), path_(std::move(cache_file)) {
    if (!path_ || !std::filesystem::exists(*path_)) return;
    std::ifstream in(*path_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            cache_[j.at("key").get<std::string>()] = j.at("error").get<double>();
        } catch (const nlohmann::json::exception&) {
            break; // trailing partial record from an interrupted run
        }
    }
}

EvaluationResult CachedEvaluator::evaluate(const CandidateConfig& config) {
    std::string key = layout_.canonical_key(config);
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            EvaluationResult r;
            r.error = it->second;
            r.metadata["cache"] = "hit";
            return r;
        }
    }
    EvaluationResult r = inner_.evaluate(config);
    {
        std::lock_guard lock(mutex_);
        auto [it, inserted] = cache_.emplace(key, r.error);
        if (inserted && path_) {
            nlohmann::json j;
            j["key"] = key;
            j["error"] = r.error;
            j["time"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
            std::ofstream out(*path_, std::ios::app);
            out << j.dump() << '\n';
        }
        if (!inserted) r.error = it->second;
    }
    return r;
}

bool CachedEvaluator::contains(const std::string& key) const {
    std::lock_guard lock(mutex_);
    return cache_.count(key) > 0;
}

std::size_t CachedEvaluator::entries() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

} // namespace nndse
