#include "nndse/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nndse/errors.hpp"

namespace nndse {

void TrainingSet::add(std::vector<double> x, double y) {
    if (!inputs.empty() && x.size() != inputs.front().size())
        throw ValidationError("training set: input length mismatch");
    if (y < 0.0 || y > 1.0) throw ValidationError("training set: target outside [0, 1]");
    inputs.push_back(std::move(x));
    targets.push_back(y);
}

RegressorModel RegressorModel::init(int input_dim, const SurrogateTrainConfig& config, Rng& rng) {
    if (input_dim < 1) throw ValidationError("init_regressor: input_dim must be >= 1");
    if (config.hidden_multiple < 1)
        throw ValidationError("init_regressor: hidden_multiple must be >= 1");
    RegressorModel m;
    m.input_dim_ = input_dim;
    m.hidden_ = config.hidden_multiple * input_dim;
    auto fill = [&](std::vector<double>& w, std::size_t n, int fan_in) {
        double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
        w.resize(n);
        for (auto& v : w) v = (2.0 * rng.uniform() - 1.0) * limit;
    };
    fill(m.w1_, static_cast<std::size_t>(m.hidden_) * input_dim, input_dim);
    fill(m.w2_, static_cast<std::size_t>(m.hidden_) * m.hidden_, m.hidden_);
    fill(m.w3_, m.hidden_, m.hidden_);
    m.b1_.assign(m.hidden_, 0.0);
    m.b2_.assign(m.hidden_, 0.0);
    m.b3_ = 0.0;
    return m;
}

void RegressorModel::forward(std::span<const double> x, RegressorWorkspace& ws,
                             double* out) const {
    const int h = hidden_, in = input_dim_;
    ws.a1.resize(h);
    ws.a2.resize(h);
    for (int i = 0; i < h; ++i) {
        const double* row = w1_.data() + static_cast<std::size_t>(i) * in;
        double s = b1_[i];
        for (int j = 0; j < in; ++j) s += row[j] * x[j];
        ws.a1[i] = s > 0.0 ? s : 0.0;
    }
    for (int i = 0; i < h; ++i) {
        const double* row = w2_.data() + static_cast<std::size_t>(i) * h;
        double s = b2_[i];
        for (int j = 0; j < h; ++j) s += row[j] * ws.a1[j];
        ws.a2[i] = s > 0.0 ? s : 0.0;
    }
    double s = b3_;
    for (int j = 0; j < h; ++j) s += w3_[j] * ws.a2[j];
    *out = s;
}

double RegressorModel::predict(std::span<const double> x, RegressorWorkspace& ws) const {
    if (static_cast<int>(x.size()) != input_dim_)
        throw ValidationError("predict: input length " + std::to_string(x.size()) +
                              " != input_dim " + std::to_string(input_dim_));
    double out;
    forward(x, ws, &out);
    return out;
}

double RegressorModel::predict(std::span<const double> x) const {
    RegressorWorkspace ws;
    return predict(x, ws);
}

void fit(RegressorModel& model, const TrainingSet& data, const SurrogateTrainConfig& config,
         Rng& rng) {
    if (data.empty()) throw ValidationError("fit: training set is empty");
    if (config.learning_rate <= 0.0) throw ValidationError("fit: learning_rate must be > 0");
    if (config.epochs_per_update < 1) throw ValidationError("fit: epochs must be >= 1");
    const int h = model.hidden_, in = model.input_dim_;
    const double lr = config.learning_rate;
    const std::size_t n = data.size();

    RegressorWorkspace ws;
    ws.a1.resize(h);
    ws.a2.resize(h);
    ws.d1.resize(h);
    ws.d2.resize(h);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
        // Fisher-Yates shuffle for the per-epoch sweep order.
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = rng.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t k = 0; k < n; ++k) {
            const std::vector<double>& x = data.inputs[order[k]];
            const double y = data.targets[order[k]];

            double yhat;
            model.forward(x, ws, &yhat);
            if (!std::isfinite(yhat))
                throw DivergenceError("fit: non-finite prediction at epoch " +
                                          std::to_string(epoch),
                                      epoch);

            const double g = 2.0 * (yhat - y); // dL/dyhat

            // Output layer grads feed hidden-2 deltas.
            for (int i = 0; i < h; ++i)
                ws.d2[i] = ws.a2[i] > 0.0 ? g * model.w3_[i] : 0.0;
            // Hidden-1 deltas.
            for (int j = 0; j < h; ++j) ws.d1[j] = 0.0;
            for (int i = 0; i < h; ++i) {
                if (ws.d2[i] == 0.0) continue;
                const double d = ws.d2[i];
                const double* row = model.w2_.data() + static_cast<std::size_t>(i) * h;
                for (int j = 0; j < h; ++j) ws.d1[j] += d * row[j];
            }
            for (int j = 0; j < h; ++j)
                if (ws.a1[j] <= 0.0) ws.d1[j] = 0.0;

            // Parameter updates.
            for (int i = 0; i < h; ++i) {
                model.w3_[i] -= lr * g * ws.a2[i];
            }
            model.b3_ -= lr * g;
            for (int i = 0; i < h; ++i) {
                const double d = ws.d2[i];
                if (d == 0.0) continue;
                double* row = model.w2_.data() + static_cast<std::size_t>(i) * h;
                const double step = lr * d;
                for (int j = 0; j < h; ++j) row[j] -= step * ws.a1[j];
                model.b2_[i] -= step;
            }
            for (int i = 0; i < h; ++i) {
                const double d = ws.d1[i];
                if (d == 0.0) continue;
                double* row = model.w1_.data() + static_cast<std::size_t>(i) * in;
                const double step = lr * d;
                for (int j = 0; j < in; ++j) row[j] -= step * x[j];
                model.b1_[i] -= step;
            }
        }
    }
}

double gradient_check(const RegressorModel& model, std::span<const double> x, double target) {
    RegressorModel m = model;
    const int h = m.hidden_, in = m.input_dim_;
    RegressorWorkspace ws;

    // Analytic gradient of L = (yhat - y)^2.
    double yhat;
    m.forward(x, ws, &yhat);
    const double g = 2.0 * (yhat - target);
    std::vector<double> gw1(m.w1_.size()), gb1(h), gw2(m.w2_.size()), gb2(h), gw3(h);
    double gb3 = g;
    std::vector<double> d2(h), d1(h, 0.0);
    for (int i = 0; i < h; ++i) {
        gw3[i] = g * ws.a2[i];
        d2[i] = ws.a2[i] > 0.0 ? g * m.w3_[i] : 0.0;
    }
    for (int i = 0; i < h; ++i) {
        gb2[i] = d2[i];
        for (int j = 0; j < h; ++j) {
            gw2[static_cast<std::size_t>(i) * h + j] = d2[i] * ws.a1[j];
            d1[j] += d2[i] * m.w2_[static_cast<std::size_t>(i) * h + j];
        }
    }
    for (int j = 0; j < h; ++j)
        if (ws.a1[j] <= 0.0) d1[j] = 0.0;
    for (int i = 0; i < h; ++i) {
        gb1[i] = d1[i];
        for (int j = 0; j < in; ++j)
            gw1[static_cast<std::size_t>(i) * in + j] = d1[i] * x[j];
    }

    // Central finite differences over every parameter.
    const double eps = 1e-5;
    double worst = 0.0;
    auto loss_at = [&]() {
        double out;
        m.forward(x, ws, &out);
        double d = out - target;
        return d * d;
    };
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + eps;
        double lp = loss_at();
        param = saved - eps;
        double lm = loss_at();
        param = saved;
        double numeric = (lp - lm) / (2.0 * eps);
        double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-10});
        worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    };
    for (std::size_t i = 0; i < m.w1_.size(); ++i) probe(m.w1_[i], gw1[i]);
    for (int i = 0; i < h; ++i) probe(m.b1_[i], gb1[i]);
    for (std::size_t i = 0; i < m.w2_.size(); ++i) probe(m.w2_[i], gw2[i]);
    for (int i = 0; i < h; ++i) probe(m.b2_[i], gb2[i]);
    for (int i = 0; i < h; ++i) probe(m.w3_[i], gw3[i]);
    probe(m.b3_, gb3);
    return worst;
}

nlohmann::json RegressorModel::to_json() const {
    nlohmann::json j;
    j["shape"] = {input_dim_, hidden_, hidden_, 1};
    j["w1"] = w1_;
    j["b1"] = b1_;
    j["w2"] = w2_;
    j["b2"] = b2_;
    j["w3"] = w3_;
    j["b3"] = b3_;
    return j;
}

RegressorModel RegressorModel::from_json(const nlohmann::json& j) {
    RegressorModel m;
    auto shape = j.at("shape").get<std::vector<int>>();
    if (shape.size() != 4 || shape[1] != shape[2] || shape[3] != 1)
        throw FormatError("regressor: bad shape header");
    m.input_dim_ = shape[0];
    m.hidden_ = shape[1];
    m.w1_ = j.at("w1").get<std::vector<double>>();
    m.b1_ = j.at("b1").get<std::vector<double>>();
    m.w2_ = j.at("w2").get<std::vector<double>>();
    m.b2_ = j.at("b2").get<std::vector<double>>();
    m.w3_ = j.at("w3").get<std::vector<double>>();
    m.b3_ = j.at("b3").get<double>();
    if (m.w1_.size() != static_cast<std::size_t>(m.hidden_) * m.input_dim_ ||
        m.b1_.size() != static_cast<std::size_t>(m.hidden_) ||
        m.w2_.size() != static_cast<std::size_t>(m.hidden_) * m.hidden_ ||
        m.b2_.size() != static_cast<std::size_t>(m.hidden_) ||
        m.w3_.size() != static_cast<std::size_t>(m.hidden_))
        throw FormatError("regressor: array sizes do not match shape header");
    return m;
}

} // namespace nndse
