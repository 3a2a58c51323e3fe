#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nndse/dataset.hpp"
#include "nndse/errors.hpp"
#include "nndse/trainer.hpp"

using namespace nndse;

namespace {

Topology blob_mlp() {
    Topology t;
    t.input = InputShape::flat_size(2);
    t.fc_layers = {8};
    t.output_nodes = 2;
    return t;
}

} // namespace

TEST_CASE("toy trainer learns separable blobs") {
    Dataset d = make_blob_dataset(400, 200, 11);
    TrainHyper h;
    h.learning_rate = 0.5;
    h.batch_size = 20;
    h.epochs = 10;
    Rng rng(1);
    EvaluationResult r = train_and_test(blob_mlp(), h, d, rng);
    CHECK(r.error < 0.05);
}

TEST_CASE("zero epochs gives chance-level error on balanced data") {
    Dataset d = make_digit_dataset(50, 2000, 21);
    Topology t;
    t.input = InputShape::flat_size(784);
    t.fc_layers = {16};
    t.output_nodes = 10;
    TrainHyper h;
    h.epochs = 0;
    Rng rng(2);
    EvaluationResult r = train_and_test(t, h, d, rng);
    CHECK(r.error == doctest::Approx(0.9).epsilon(0.06));
}

TEST_CASE("softmax outputs are normalized on every forward pass") {
    Dataset d = make_digit_dataset(32, 0, 31);
    Topology t;
    t.input = InputShape::flat_size(784);
    t.fc_layers = {12};
    t.output_nodes = 10;
    Rng rng(3);
    ToyNet net(t, Activation::relu, rng);
    for (std::size_t i = 0; i < d.train.count(); ++i) {
        std::vector<double> probs = net.predict_probs(
            std::span<const double>(d.train.sample(i), 784));
        double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
        CHECK(std::fabs(sum - 1.0) < 1e-6);
        for (double p : probs) CHECK(p >= 0.0);
    }
}

TEST_CASE("trainer gradient check on a tiny MLP") {
    Dataset d = make_blob_dataset(4, 1, 41);
    Rng rng(4);
    for (Activation a : {Activation::relu, Activation::tanh, Activation::sigmoid}) {
        ToyNet net(blob_mlp(), a, rng);
        double worst = net.gradient_check(std::span<const double>(d.train.sample(0), 2),
                                          d.train.labels[0]);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("trainer gradient check on a tiny CNN") {
    Topology t;
    t.input = {1, 6, 6};
    t.conv_layers = {{3, 3, 2}};
    t.fc_layers = {5};
    t.output_nodes = 3;
    Rng rng(5);
    Rng data_rng(6);
    std::vector<double> x(36);
    for (auto& v : x) v = data_rng.uniform();
    for (Activation a : {Activation::relu, Activation::tanh}) {
        ToyNet net(t, a, rng);
        CHECK(net.gradient_check(x, 2) < 1e-4);
    }
}

TEST_CASE("two-conv-layer CNN trains forward/backward without error") {
    Topology t;
    t.input = {1, 12, 12};
    t.conv_layers = {{4, 3, 2}, {6, 2, 2}};
    t.fc_layers = {10};
    t.output_nodes = 4;
    Rng rng(6);
    ToyNet net(t, Activation::relu, rng);
    std::vector<double> x(144);
    Rng data_rng(7);
    for (auto& v : x) v = data_rng.uniform();
    CHECK(net.gradient_check(x, 1) < 1e-4);
}

TEST_CASE("conv forward matches a hand computation") {
    // 2x2 input, single 2x2 kernel: the conv output is the dot product.
    Topology t;
    t.input = {1, 2, 2};
    t.conv_layers = {{1, 2, 1}};
    t.output_nodes = 2;
    Rng rng(8);
    ToyNet net(t, Activation::relu, rng);
    // With one conv output feeding 2 logits, probabilities depend only on the
    // (deterministic) weights; just check normalization and determinism here.
    std::vector<double> x{0.1, 0.9, 0.4, 0.7};
    auto p1 = net.predict_probs(x);
    auto p2 = net.predict_probs(x);
    CHECK(p1 == p2);
    CHECK(std::fabs(p1[0] + p1[1] - 1.0) < 1e-12);
}

TEST_CASE("training loss is non-increasing on separable data") {
    Dataset d = make_blob_dataset(300, 50, 51);
    Topology t = blob_mlp();
    Rng rng(9);
    ToyNet net(t, Activation::relu, rng);
    std::vector<std::size_t> idx(d.train.count());
    std::iota(idx.begin(), idx.end(), 0);
    double prev = 1e300;
    for (int epoch = 0; epoch < 8; ++epoch) {
        double loss = 0.0;
        int batches = 0;
        for (std::size_t s = 0; s < idx.size(); s += 30) {
            std::size_t e = std::min(idx.size(), s + 30);
            loss += net.train_batch(d.train, std::span<const std::size_t>(idx.data() + s, e - s),
                                    0.3);
            ++batches;
        }
        loss /= batches;
        CHECK(loss <= prev * 1.05);
        prev = loss;
    }
}

TEST_CASE("fixed seed reproduces the evaluation exactly") {
    Dataset d = make_blob_dataset(100, 40, 61);
    TrainHyper h;
    h.batch_size = 25;
    h.epochs = 3;
    Rng a(10), b(10);
    EvaluationResult r1 = train_and_test(blob_mlp(), h, d, a);
    EvaluationResult r2 = train_and_test(blob_mlp(), h, d, b);
    CHECK(r1.error == r2.error);
}

TEST_CASE("absurd learning rate diverges") {
    Dataset d = make_blob_dataset(100, 40, 71);
    TrainHyper h;
    h.learning_rate = 1e18;
    h.epochs = 5;
    Rng rng(11);
    CHECK_THROWS_AS(train_and_test(blob_mlp(), h, d, rng), DivergenceError);
}

TEST_CASE("train_and_test validates inputs") {
    Dataset d = make_blob_dataset(10, 10, 81);
    TrainHyper h;
    Rng rng(12);
    Topology wrong = blob_mlp();
    wrong.input = InputShape::flat_size(3);
    CHECK_THROWS_AS(train_and_test(wrong, h, d, rng), ValidationError);
    h.learning_rate = 0.0;
    CHECK_THROWS_AS(train_and_test(blob_mlp(), h, d, rng), ValidationError);
}
