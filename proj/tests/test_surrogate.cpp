#include <doctest.h>

#include <cmath>

#include "nndse/errors.hpp"
#include "nndse/surrogate.hpp"

using namespace nndse;

namespace {

SurrogateTrainConfig small_config(int multiple = 2) {
    SurrogateTrainConfig c;
    c.hidden_multiple = multiple;
    return c;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

} // namespace

TEST_CASE("init sizes, determinism and magnitude bound") {
    Rng rng(1);
    SurrogateTrainConfig cfg;
    cfg.hidden_multiple = 25;
    RegressorModel m = RegressorModel::init(5, cfg, rng);
    CHECK(m.input_dim() == 5);
    CHECK(m.hidden_dim() == 125);

    Rng a(9), b(9);
    RegressorModel m1 = RegressorModel::init(4, small_config(), a);
    RegressorModel m2 = RegressorModel::init(4, small_config(), b);
    CHECK(m1 == m2);

    auto j = m1.to_json();
    double bound1 = std::sqrt(3.0 / 4.0) + 1e-12;
    for (double w : j["w1"].get<std::vector<double>>()) CHECK(std::fabs(w) <= bound1);
    double bound2 = std::sqrt(3.0 / 8.0) + 1e-12;
    for (double w : j["w2"].get<std::vector<double>>()) CHECK(std::fabs(w) <= bound2);
    for (double bias : j["b1"].get<std::vector<double>>()) CHECK(bias == 0.0);
    CHECK(j["b3"].get<double>() == 0.0);

    CHECK_THROWS_AS(RegressorModel::init(0, cfg, rng), ValidationError);
}

TEST_CASE("predict: zero model, hand-built model, dimension checks") {
    // zero-initialized weights predict 0 for any input
    Rng rng(2);
    RegressorModel zero = RegressorModel::init(3, small_config(), rng);
    auto j = zero.to_json();
    j["w1"] = std::vector<double>(j["w1"].size(), 0.0);
    j["w2"] = std::vector<double>(j["w2"].size(), 0.0);
    j["w3"] = std::vector<double>(j["w3"].size(), 0.0);
    RegressorModel z = RegressorModel::from_json(j);
    std::vector<double> x{0.3, -0.7, 1.0};
    CHECK(z.predict(x) == 0.0);

    // 1-1-1-1 model with known weights: yhat = w3*relu(w2*relu(w1*x+b1)+b2)+b3
    nlohmann::json h;
    h["shape"] = {1, 1, 1, 1};
    h["w1"] = {2.0};
    h["b1"] = {0.5};
    h["w2"] = {-1.5};
    h["b2"] = {4.0};
    h["w3"] = {3.0};
    h["b3"] = 0.25;
    RegressorModel tiny = RegressorModel::from_json(h);
    // x=1: a1=relu(2.5)=2.5, a2=relu(-3.75+4)=0.25, y=0.75+0.25=1.0
    std::vector<double> one{1.0};
    CHECK(tiny.predict(one) == doctest::Approx(1.0).epsilon(1e-15));
    // x=-1: a1=relu(-1.5)=0, a2=relu(4)=4, y=12.25
    std::vector<double> minus{-1.0};
    CHECK(tiny.predict(minus) == doctest::Approx(12.25).epsilon(1e-15));
    // deterministic
    CHECK(tiny.predict(one) == tiny.predict(one));

    std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_AS(tiny.predict(wrong), ValidationError);
}

TEST_CASE("fit converges on a single sample") {
    Rng rng(3);
    RegressorModel m = RegressorModel::init(4, small_config(4), rng);
    TrainingSet data;
    data.add({0.2, 0.4, 0.6, 0.8}, 0.37);
    SurrogateTrainConfig cfg;
    cfg.hidden_multiple = 4;
    cfg.epochs_per_update = 200;
    fit(m, data, cfg, rng);
    CHECK(std::fabs(m.predict(data.inputs[0]) - 0.37) < 1e-3);
}

TEST_CASE("fit rejects an empty set") {
    Rng rng(4);
    RegressorModel m = RegressorModel::init(2, small_config(), rng);
    TrainingSet data;
    CHECK_THROWS_AS(fit(m, data, SurrogateTrainConfig{}, rng), ValidationError);
}

TEST_CASE("identical inputs with different targets converge to the mean") {
    Rng rng(5);
    RegressorModel m = RegressorModel::init(3, small_config(4), rng);
    TrainingSet data;
    data.add({0.5, 0.5, 0.5}, 0.2);
    data.add({0.5, 0.5, 0.5}, 0.8);
    SurrogateTrainConfig cfg;
    cfg.hidden_multiple = 4;
    cfg.epochs_per_update = 100;
    cfg.learning_rate = 0.05;
    for (int round = 0; round < 5; ++round) fit(m, data, cfg, rng);
    CHECK(m.predict(data.inputs[0]) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("fit with vanishing learning rate leaves parameters unchanged") {
    Rng rng(6);
    RegressorModel m = RegressorModel::init(3, small_config(), rng);
    RegressorModel before = m;
    TrainingSet data;
    data.add({0.1, 0.2, 0.3}, 0.5);
    SurrogateTrainConfig cfg;
    cfg.hidden_multiple = 2;
    cfg.learning_rate = 1e-300;
    cfg.epochs_per_update = 3;
    fit(m, data, cfg, rng);
    auto ja = m.to_json(), jb = before.to_json();
    for (const char* key : {"w1", "w2", "w3"}) {
        auto a = ja[key].get<std::vector<double>>();
        auto b = jb[key].get<std::vector<double>>();
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(std::fabs(a[i] - b[i]) <= 1e-290);
    }
}

TEST_CASE("training set validation") {
    TrainingSet data;
    data.add({0.1, 0.2}, 0.5);
    CHECK_THROWS_AS(data.add({0.1}, 0.5), ValidationError);
    CHECK_THROWS_AS(data.add({0.1, 0.2}, 1.5), ValidationError);
}

TEST_CASE("scale invariance for all-positive pre-activations") {
    // Positive weights, zero biases, positive inputs: every rectifier stays
    // active and relu is positively homogeneous, so doubling the first-layer
    // weights and halving the output weights leaves predictions unchanged.
    nlohmann::json h;
    h["shape"] = {2, 2, 2, 1};
    h["w1"] = {0.3, 0.4, 0.5, 0.6};
    h["b1"] = {0.0, 0.0};
    h["w2"] = {0.7, 0.2, 0.3, 0.9};
    h["b2"] = {0.0, 0.0};
    h["w3"] = {0.8, 0.4};
    h["b3"] = 0.02;
    RegressorModel m = RegressorModel::from_json(h);

    nlohmann::json h2 = h;
    for (auto& w : h2["w1"]) w = w.get<double>() * 2.0;
    for (auto& w : h2["w3"]) w = w.get<double>() * 0.5;
    RegressorModel scaled = RegressorModel::from_json(h2);

    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x = random_vec(rng, 2, 0.1, 1.0);
        CHECK(scaled.predict(x) == doctest::Approx(m.predict(x)).epsilon(1e-14));
    }
}

TEST_CASE("gradient check: random small instances stay under 1e-4") {
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        int dim = 2 + static_cast<int>(rng.uniform_index(4));
        RegressorModel m = RegressorModel::init(dim, small_config(3), rng);
        // keep pre-activations away from rectifier kinks
        std::vector<double> x = random_vec(rng, dim, 0.11, 0.97);
        double target = rng.uniform();
        worst = std::max(worst, gradient_check(m, x, target));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: zero model with zero target") {
    nlohmann::json h;
    h["shape"] = {2, 2, 2, 1};
    h["w1"] = {0.0, 0.0, 0.0, 0.0};
    h["b1"] = {0.0, 0.0};
    h["w2"] = {0.0, 0.0, 0.0, 0.0};
    h["b2"] = {0.0, 0.0};
    h["w3"] = {0.0, 0.0};
    h["b3"] = 0.0;
    RegressorModel m = RegressorModel::from_json(h);
    std::vector<double> x{0.5, 0.5};
    CHECK(gradient_check(m, x, 0.0) == 0.0);
}

TEST_CASE("json round-trip preserves predictions bit-exactly") {
    Rng rng(123);
    RegressorModel m = RegressorModel::init(6, small_config(5), rng);
    TrainingSet data;
    for (int i = 0; i < 10; ++i) data.add(random_vec(rng, 6), rng.uniform());
    SurrogateTrainConfig cfg;
    cfg.hidden_multiple = 5;
    cfg.epochs_per_update = 5;
    fit(m, data, cfg, rng);

    // through text, as the log writer would do
    auto text = m.to_json().dump();
    RegressorModel back = RegressorModel::from_json(nlohmann::json::parse(text));
    CHECK(back == m);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> x = random_vec(rng, 6);
        CHECK(back.predict(x) == m.predict(x));
    }
    CHECK_THROWS_AS(RegressorModel::from_json(nlohmann::json{{"shape", {1, 2, 3}}}), FormatError);
}
