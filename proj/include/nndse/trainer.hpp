#pragma once

#include <chrono>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nndse/cost_model.hpp"
#include "nndse/dataset.hpp"
#include "nndse/rng.hpp"

namespace nndse {

enum class Activation { relu, tanh, sigmoid };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct TrainHyper {
    double learning_rate = 0.1;
    int batch_size = 200;
    int epochs = 10;
    Activation activation = Activation::relu;
};

struct EvaluationResult {
    double error = 0.0; // 1 - test accuracy
    std::chrono::duration<double> wall_time{0.0};
    std::map<std::string, std::string> metadata;
};

// Candidate network under training: conv/pool stack then FC stack, softmax
// output, categorical cross-entropy loss, trained by mini-batch SGD with
// mean-of-batch gradients. Biases are learned (the cost model ignores them).
class ToyNet {
public:
    ToyNet(const Topology& topology, Activation activation, Rng& rng);

    int input_size() const { return input_.flat(); }
    int num_classes() const;

    // Softmax probabilities for one sample.
    std::vector<double> predict_probs(std::span<const double> x) const;

    // One mini-batch step (mean gradient); returns the mean sample loss.
    double train_batch(const LabeledImages& data, std::span<const std::size_t> indices,
                       double learning_rate);

    double test_error(const LabeledImages& data) const;

    // Worst relative discrepancy between backprop and central finite
    // differences (step 1e-5) of the cross-entropy loss on one sample.
    double gradient_check(std::span<const double> x, int label);

private:
    struct ConvLayer {
        int in_channels, in_h, in_w;
        int filters, kernel, pool;
        int conv_h, conv_w, out_h, out_w;
        std::vector<double> w, b, gw, gb;
    };
    struct FcLayer {
        int in, out;
        bool linear_output;
        std::vector<double> w, b, gw, gb;
    };
    struct Workspace {
        std::vector<std::vector<double>> conv_act;   // activated conv maps
        std::vector<std::vector<double>> pool_out;   // pooled maps
        std::vector<std::vector<int>> pool_argmax;   // winner offsets
        std::vector<std::vector<double>> fc_act;     // fc_act[0] = flattened input
        std::vector<std::vector<double>> conv_delta; // gradients wrt conv maps
        std::vector<std::vector<double>> pool_delta;
        std::vector<std::vector<double>> fc_delta;
        std::vector<double> probs;
    };

    void forward(const double* x, Workspace& ws) const;
    void backward(const double* x, int label, Workspace& ws);
    void zero_grads();
    void apply_grads(double scale);
    Workspace make_workspace() const;

    InputShape input_;
    Activation activation_;
    std::vector<ConvLayer> conv_;
    std::vector<FcLayer> fc_;
};

// Trains the candidate and reports 1 - accuracy on the test split. Epochs may
// be zero (evaluates the freshly initialized network). Throws DivergenceError
// when the training loss turns non-finite.
EvaluationResult train_and_test(const Topology& topology, const TrainHyper& hyper,
                                const Dataset& dataset, Rng& rng);

} // namespace nndse
