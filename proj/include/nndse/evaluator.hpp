#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "nndse/cost_model.hpp"
#include "nndse/dataset.hpp"
#include "nndse/design_space.hpp"
#include "nndse/trainer.hpp"

namespace nndse {

// Training-protocol constants carried by a preset (Table-2 style rows with a
// single value live here, not in the searched space).
struct TrainDefaults {
    std::string activation = "relu";
    std::string algorithm = "sgd";
    int batch_size = 200;
    int epochs = 10;
};

// What candidate networks are built against.
struct EvalTarget {
    InputShape input;
    int num_classes = 10;
    TrainDefaults train;
};

// Maps a candidate to a concrete Topology. Recognised slot names:
// conv_filters/conv_kernel/conv_pool (per conv layer), fc_nodes (per FC
// layer); grid values are rounded to integers. Throws
// InfeasibleTopologyError when spatial dimensions underflow.
Topology build_topology(const SpaceLayout& layout, const CandidateConfig& config,
                        const InputShape& input, int num_classes);

// Training hyper-parameters for a candidate: learning_rate and activation come
// from the config when searched, otherwise from the defaults.
TrainHyper hyper_for(const SpaceLayout& layout, const CandidateConfig& config,
                     const TrainDefaults& defaults);

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvaluationResult evaluate(const CandidateConfig& config) = 0;
    virtual std::string name() const = 0;
};

// Closed-form response surface over the encoded vector; deterministic, in
// [0, 1]. With x the encoded entries, S the position-weighted sum of numeric
// capacity entries (learning rate excluded) and f = lr / lr_max:
//
//   error = clamp( 0.02 + 0.9*exp(-1.8*S) * (1 + 0.06*sin(sum_j (11.3+7.7j)*x_j))
//                  + 0.03*ln(f/0.25)^2 + sum_groups 0.015*chosen/(K-1) )
//
// where S = sum_k x_k / (1 + 0.3*k) over capacity entries in encoding order.
// Error falls with capacity at a diminishing rate, has a mild optimum at
// f = 0.25, and carries a small smooth texture.
double synthetic_error(const SpaceLayout& layout, const CandidateConfig& config);

class SyntheticEvaluator final : public Evaluator {
public:
    explicit SyntheticEvaluator(const SpaceLayout& layout) : layout_(layout) {}
    EvaluationResult evaluate(const CandidateConfig& config) override;
    std::string name() const override { return "synthetic"; }

private:
    const SpaceLayout& layout_;
};

// Trains the candidate with the built-in trainer. Per-candidate rng is
// derived from the run seed and the canonical config key, so results do not
// depend on evaluation order. Divergent training reports error = 1.0.
class ToyTrainerEvaluator final : public Evaluator {
public:
    ToyTrainerEvaluator(const SpaceLayout& layout, const Dataset& dataset, EvalTarget target,
                        std::uint64_t seed);
    EvaluationResult evaluate(const CandidateConfig& config) override;
    std::string name() const override { return "toy"; }

private:
    const SpaceLayout& layout_;
    const Dataset& dataset_;
    EvalTarget target_;
    std::uint64_t seed_;
};

// Line protocol to a child process:
//   request:  eval <config_id> <name>=<index|label|-> ... encoded=<v1,...,vn>
//   response: ok error=<float> [key=value ...]   |   err <message>
// One line each way per evaluation. The child is spawned on first use and
// respawned if it dies.
class ExternalEvaluator final : public Evaluator {
public:
    ExternalEvaluator(const SpaceLayout& layout, std::string command, double timeout_seconds = 30.0);
    ~ExternalEvaluator() override;
    EvaluationResult evaluate(const CandidateConfig& config) override;
    std::string name() const override { return "external"; }

private:
    struct Child;
    void ensure_child();
    const SpaceLayout& layout_;
    std::string command_;
    double timeout_;
    std::unique_ptr<Child> child_;
};

// Memoizes on the canonical config key. Optionally persists hits to an
// append-only record file so later runs reuse stored results.
class CachedEvaluator final : public Evaluator {
public:
    CachedEvaluator(const SpaceLayout& layout, Evaluator& inner,
                    std::optional<std::filesystem::path> cache_file = std::nullopt);
    EvaluationResult evaluate(const CandidateConfig& config) override;
    std::string name() const override { return inner_.name(); }

    bool contains(const std::string& key) const;
    std::size_t entries() const;

private:
    const SpaceLayout& layout_;
    Evaluator& inner_;
    std::optional<std::filesystem::path> path_;
    std::map<std::string, double> cache_;
    mutable std::mutex mutex_;
};

} // namespace nndse
