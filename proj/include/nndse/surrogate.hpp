#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nndse/rng.hpp"

namespace nndse {

struct SurrogateTrainConfig {
    double learning_rate = 0.1;
    int epochs_per_update = 100;
    int hidden_multiple = 25; // hidden width = multiple * input_dim
};

struct TrainingSet {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets; // measured errors in [0, 1]

    void add(std::vector<double> x, double y);
    std::size_t size() const { return targets.size(); }
    bool empty() const { return targets.empty(); }
};

// Scratch buffers for forward/backward passes.
struct RegressorWorkspace {
    std::vector<double> a1, a2, d1, d2;
};

// Feed-forward regressor: input -> rectifier -> rectifier -> linear scalar.
class RegressorModel {
public:
    static RegressorModel init(int input_dim, const SurrogateTrainConfig& config, Rng& rng);

    double predict(std::span<const double> x) const;
    double predict(std::span<const double> x, RegressorWorkspace& ws) const;

    int input_dim() const { return input_dim_; }
    int hidden_dim() const { return hidden_; }

    // Flat parameter arrays with a shape header.
    nlohmann::json to_json() const;
    static RegressorModel from_json(const nlohmann::json& j);

    bool operator==(const RegressorModel&) const = default;

    friend void fit(RegressorModel& model, const TrainingSet& data,
                    const SurrogateTrainConfig& config, Rng& rng);
    friend double gradient_check(const RegressorModel& model, std::span<const double> x,
                                 double target);

private:
    int input_dim_ = 0;
    int hidden_ = 0;
    // Row-major: w1_[h][in], w2_[h][h], w3_[1][h].
    std::vector<double> w1_, b1_, w2_, b2_, w3_;
    double b3_ = 0.0;

    void forward(std::span<const double> x, RegressorWorkspace& ws, double* out) const;
};

// Per-sample SGD on squared error, shuffled full-set sweeps. Warm start: the
// model keeps its current parameters as the starting point. Throws
// DivergenceError (with the epoch index) if the loss turns non-finite.
void fit(RegressorModel& model, const TrainingSet& data, const SurrogateTrainConfig& config,
         Rng& rng);

// Worst relative discrepancy between analytic loss gradients and central
// finite differences (step 1e-5) over all parameters.
double gradient_check(const RegressorModel& model, std::span<const double> x, double target);

} // namespace nndse
