#include "nndse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nndse/errors.hpp"

namespace nndse {

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    }
    return "relu";
}

namespace {

double activate(Activation a, double z) {
    switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// Derivative expressed through the activated value.
double activate_deriv(Activation a, double act) {
    switch (a) {
    case Activation::relu: return act > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - act * act;
    case Activation::sigmoid: return act * (1.0 - act);
    }
    return 1.0;
}

void init_uniform(std::vector<double>& w, int fan_in, Rng& rng) {
    double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (auto& v : w) v = (2.0 * rng.uniform() - 1.0) * limit;
}

void softmax(std::span<const double> logits, std::vector<double>& probs) {
    probs.resize(logits.size());
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
}

} // namespace

ToyNet::ToyNet(const Topology& topology, Activation activation, Rng& rng)
    : input_(topology.input), activation_(activation) {
    // cnn_counts performs full feasibility validation.
    (void)cnn_counts(topology);

    int c = input_.channels, h = input_.height, w = input_.width;
    for (const auto& spec : topology.conv_layers) {
        ConvLayer l;
        l.in_channels = c;
        l.in_h = h;
        l.in_w = w;
        l.filters = spec.filters;
        l.kernel = spec.kernel;
        l.pool = spec.pool;
        l.conv_h = h - spec.kernel + 1;
        l.conv_w = w - spec.kernel + 1;
        l.out_h = l.conv_h / spec.pool;
        l.out_w = l.conv_w / spec.pool;
        std::size_t nw = static_cast<std::size_t>(l.filters) * c * spec.kernel * spec.kernel;
        l.w.resize(nw);
        init_uniform(l.w, c * spec.kernel * spec.kernel, rng);
        l.b.assign(l.filters, 0.0);
        l.gw.assign(nw, 0.0);
        l.gb.assign(l.filters, 0.0);
        conv_.push_back(std::move(l));
        c = spec.filters;
        h = conv_.back().out_h;
        w = conv_.back().out_w;
    }

    int in = c * h * w;
    std::vector<int> widths = topology.fc_layers;
    widths.push_back(topology.output_nodes);
    for (std::size_t i = 0; i < widths.size(); ++i) {
        FcLayer l;
        l.in = in;
        l.out = widths[i];
        l.linear_output = (i + 1 == widths.size());
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        init_uniform(l.w, l.in, rng);
        l.b.assign(l.out, 0.0);
        l.gw.assign(l.w.size(), 0.0);
        l.gb.assign(l.out, 0.0);
        fc_.push_back(std::move(l));
        in = l.out;
    }
}

int ToyNet::num_classes() const { return fc_.back().out; }

ToyNet::Workspace ToyNet::make_workspace() const {
    Workspace ws;
    for (const auto& l : conv_) {
        ws.conv_act.emplace_back(static_cast<std::size_t>(l.filters) * l.conv_h * l.conv_w);
        ws.pool_out.emplace_back(static_cast<std::size_t>(l.filters) * l.out_h * l.out_w);
        ws.pool_argmax.emplace_back(static_cast<std::size_t>(l.filters) * l.out_h * l.out_w);
        ws.conv_delta.emplace_back(ws.conv_act.back().size());
        ws.pool_delta.emplace_back(ws.pool_out.back().size());
    }
    ws.fc_act.resize(fc_.size() + 1);
    ws.fc_delta.resize(fc_.size() + 1);
    ws.fc_act[0].resize(fc_.front().in);
    ws.fc_delta[0].resize(fc_.front().in);
    for (std::size_t i = 0; i < fc_.size(); ++i) {
        ws.fc_act[i + 1].resize(fc_[i].out);
        ws.fc_delta[i + 1].resize(fc_[i].out);
    }
    return ws;
}

void ToyNet::forward(const double* x, Workspace& ws) const {
    const double* cur = x;
    for (std::size_t li = 0; li < conv_.size(); ++li) {
        const ConvLayer& l = conv_[li];
        std::vector<double>& act = ws.conv_act[li];
        for (int f = 0; f < l.filters; ++f) {
            const double* wf =
                l.w.data() + static_cast<std::size_t>(f) * l.in_channels * l.kernel * l.kernel;
            for (int oy = 0; oy < l.conv_h; ++oy) {
                for (int ox = 0; ox < l.conv_w; ++ox) {
                    double s = l.b[f];
                    for (int ci = 0; ci < l.in_channels; ++ci) {
                        const double* plane =
                            cur + static_cast<std::size_t>(ci) * l.in_h * l.in_w;
                        const double* wk =
                            wf + static_cast<std::size_t>(ci) * l.kernel * l.kernel;
                        for (int ky = 0; ky < l.kernel; ++ky)
                            for (int kx = 0; kx < l.kernel; ++kx)
                                s += wk[ky * l.kernel + kx] *
                                     plane[(oy + ky) * l.in_w + (ox + kx)];
                    }
                    act[(static_cast<std::size_t>(f) * l.conv_h + oy) * l.conv_w + ox] =
                        activate(activation_, s);
                }
            }
        }
        // Non-overlapping max-pool; trailing rows/cols beyond pool*out are dropped.
        std::vector<double>& pooled = ws.pool_out[li];
        std::vector<int>& argmax = ws.pool_argmax[li];
        for (int f = 0; f < l.filters; ++f) {
            const double* plane = act.data() + static_cast<std::size_t>(f) * l.conv_h * l.conv_w;
            for (int py = 0; py < l.out_h; ++py) {
                for (int px = 0; px < l.out_w; ++px) {
                    int best = (py * l.pool) * l.conv_w + px * l.pool;
                    double bv = plane[best];
                    for (int dy = 0; dy < l.pool; ++dy)
                        for (int dx = 0; dx < l.pool; ++dx) {
                            int off = (py * l.pool + dy) * l.conv_w + (px * l.pool + dx);
                            if (plane[off] > bv) {
                                bv = plane[off];
                                best = off;
                            }
                        }
                    std::size_t o = (static_cast<std::size_t>(f) * l.out_h + py) * l.out_w + px;
                    pooled[o] = bv;
                    argmax[o] = best;
                }
            }
        }
        cur = pooled.data();
    }

    std::copy(cur, cur + fc_.front().in, ws.fc_act[0].begin());
    for (std::size_t li = 0; li < fc_.size(); ++li) {
        const FcLayer& l = fc_[li];
        const std::vector<double>& a = ws.fc_act[li];
        std::vector<double>& out = ws.fc_act[li + 1];
        for (int i = 0; i < l.out; ++i) {
            const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
            double s = l.b[i];
            for (int j = 0; j < l.in; ++j) s += row[j] * a[j];
            out[i] = l.linear_output ? s : activate(activation_, s);
        }
    }
    softmax(ws.fc_act.back(), ws.probs);
}

void ToyNet::backward(const double* x, int label, Workspace& ws) {
    // dL/dlogit = p - onehot(label)
    std::vector<double>& dtop = ws.fc_delta[fc_.size()];
    for (std::size_t i = 0; i < ws.probs.size(); ++i)
        dtop[i] = ws.probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);

    for (std::size_t li = fc_.size(); li-- > 0;) {
        FcLayer& l = fc_[li];
        const std::vector<double>& a = ws.fc_act[li];
        std::vector<double>& d = ws.fc_delta[li + 1];
        std::vector<double>& dprev = ws.fc_delta[li];
        std::fill(dprev.begin(), dprev.end(), 0.0);
        for (int i = 0; i < l.out; ++i) {
            double di = d[i];
            if (!l.linear_output) di *= activate_deriv(activation_, ws.fc_act[li + 1][i]);
            if (di == 0.0) continue;
            double* grow = l.gw.data() + static_cast<std::size_t>(i) * l.in;
            const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
            for (int j = 0; j < l.in; ++j) {
                grow[j] += di * a[j];
                dprev[j] += di * row[j];
            }
            l.gb[i] += di;
        }
    }

    if (conv_.empty()) return;

    // Route the flattened gradient back through pool and conv stacks.
    std::copy(ws.fc_delta[0].begin(), ws.fc_delta[0].end(), ws.pool_delta.back().begin());
    for (std::size_t li = conv_.size(); li-- > 0;) {
        ConvLayer& l = conv_[li];
        std::vector<double>& dpool = ws.pool_delta[li];
        std::vector<double>& dconv = ws.conv_delta[li];
        std::fill(dconv.begin(), dconv.end(), 0.0);
        const std::vector<int>& argmax = ws.pool_argmax[li];
        for (int f = 0; f < l.filters; ++f) {
            std::size_t plane = static_cast<std::size_t>(f) * l.conv_h * l.conv_w;
            for (int o = 0; o < l.out_h * l.out_w; ++o) {
                std::size_t po = static_cast<std::size_t>(f) * l.out_h * l.out_w + o;
                dconv[plane + argmax[po]] += dpool[po];
            }
        }
        // Activation derivative on conv maps.
        const std::vector<double>& act = ws.conv_act[li];
        for (std::size_t i = 0; i < dconv.size(); ++i)
            dconv[i] *= activate_deriv(activation_, act[i]);

        const double* input =
            li == 0 ? x : ws.pool_out[li - 1].data();
        std::vector<double>* dinput = li == 0 ? nullptr : &ws.pool_delta[li - 1];
        if (dinput) std::fill(dinput->begin(), dinput->end(), 0.0);

        for (int f = 0; f < l.filters; ++f) {
            double* gwf =
                l.gw.data() + static_cast<std::size_t>(f) * l.in_channels * l.kernel * l.kernel;
            const double* wf =
                l.w.data() + static_cast<std::size_t>(f) * l.in_channels * l.kernel * l.kernel;
            const double* dplane = dconv.data() + static_cast<std::size_t>(f) * l.conv_h * l.conv_w;
            for (int oy = 0; oy < l.conv_h; ++oy) {
                for (int ox = 0; ox < l.conv_w; ++ox) {
                    double d = dplane[oy * l.conv_w + ox];
                    if (d == 0.0) continue;
                    l.gb[f] += d;
                    for (int ci = 0; ci < l.in_channels; ++ci) {
                        const double* iplane =
                            input + static_cast<std::size_t>(ci) * l.in_h * l.in_w;
                        double* gwk = gwf + static_cast<std::size_t>(ci) * l.kernel * l.kernel;
                        const double* wk = wf + static_cast<std::size_t>(ci) * l.kernel * l.kernel;
                        for (int ky = 0; ky < l.kernel; ++ky) {
                            for (int kx = 0; kx < l.kernel; ++kx) {
                                gwk[ky * l.kernel + kx] +=
                                    d * iplane[(oy + ky) * l.in_w + (ox + kx)];
                                if (dinput)
                                    (*dinput)[static_cast<std::size_t>(ci) * l.in_h * l.in_w +
                                              (oy + ky) * l.in_w + (ox + kx)] +=
                                        d * wk[ky * l.kernel + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

void ToyNet::zero_grads() {
    for (auto& l : conv_) {
        std::fill(l.gw.begin(), l.gw.end(), 0.0);
        std::fill(l.gb.begin(), l.gb.end(), 0.0);
    }
    for (auto& l : fc_) {
        std::fill(l.gw.begin(), l.gw.end(), 0.0);
        std::fill(l.gb.begin(), l.gb.end(), 0.0);
    }
}

void ToyNet::apply_grads(double scale) {
    for (auto& l : conv_) {
        for (std::size_t i = 0; i < l.w.size(); ++i) l.w[i] -= scale * l.gw[i];
        for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] -= scale * l.gb[i];
    }
    for (auto& l : fc_) {
        for (std::size_t i = 0; i < l.w.size(); ++i) l.w[i] -= scale * l.gw[i];
        for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] -= scale * l.gb[i];
    }
}

std::vector<double> ToyNet::predict_probs(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_size())
        throw ValidationError("predict_probs: input size mismatch");
    Workspace ws = make_workspace();
    forward(x.data(), ws);
    return ws.probs;
}

double ToyNet::train_batch(const LabeledImages& data, std::span<const std::size_t> indices,
                           double learning_rate) {
    Workspace ws = make_workspace();
    zero_grads();
    double loss = 0.0;
    for (std::size_t idx : indices) {
        forward(data.sample(idx), ws);
        loss += -std::log(ws.probs[data.labels[idx]]);
        backward(data.sample(idx), data.labels[idx], ws);
    }
    apply_grads(learning_rate / static_cast<double>(indices.size()));
    return loss / static_cast<double>(indices.size());
}

double ToyNet::test_error(const LabeledImages& data) const {
    Workspace ws = make_workspace();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.count(); ++i) {
        forward(data.sample(i), ws);
        std::size_t best =
            std::max_element(ws.probs.begin(), ws.probs.end()) - ws.probs.begin();
        if (best == data.labels[i]) ++correct;
    }
    return 1.0 - static_cast<double>(correct) / static_cast<double>(data.count());
}

double ToyNet::gradient_check(std::span<const double> x, int label) {
    Workspace ws = make_workspace();
    zero_grads();
    forward(x.data(), ws);
    backward(x.data(), label, ws);

    const double eps = 1e-5;
    double worst = 0.0;
    auto loss_at = [&]() {
        forward(x.data(), ws);
        return -std::log(ws.probs[label]);
    };
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + eps;
        double lp = loss_at();
        param = saved - eps;
        double lm = loss_at();
        param = saved;
        double numeric = (lp - lm) / (2.0 * eps);
        double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
        if (std::fabs(analytic) < 1e-10 && std::fabs(numeric) < 1e-10) return;
        worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    };
    for (auto& l : conv_) {
        for (std::size_t i = 0; i < l.w.size(); ++i) probe(l.w[i], l.gw[i]);
        for (std::size_t i = 0; i < l.b.size(); ++i) probe(l.b[i], l.gb[i]);
    }
    for (auto& l : fc_) {
        for (std::size_t i = 0; i < l.w.size(); ++i) probe(l.w[i], l.gw[i]);
        for (std::size_t i = 0; i < l.b.size(); ++i) probe(l.b[i], l.gb[i]);
    }
    return worst;
}

EvaluationResult train_and_test(const Topology& topology, const TrainHyper& hyper,
                                const Dataset& dataset, Rng& rng) {
    if (hyper.learning_rate <= 0.0) throw ValidationError("train: learning_rate must be > 0");
    if (hyper.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (hyper.epochs < 0) throw ValidationError("train: epochs must be >= 0");
    if (dataset.train.count() == 0 || dataset.test.count() == 0)
        throw ValidationError("train: dataset has an empty split");
    if (topology.input.flat() != dataset.train.sample_size())
        throw ValidationError("train: topology input does not match dataset");

    auto t0 = std::chrono::steady_clock::now();
    ToyNet net(topology, hyper.activation, rng);

    const std::size_t n = dataset.train.count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    double last_loss = 0.0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t s = 0; s < n; s += hyper.batch_size) {
            std::size_t e = std::min(n, s + hyper.batch_size);
            double l = net.train_batch(dataset.train,
                                       std::span<const std::size_t>(order.data() + s, e - s),
                                       hyper.learning_rate);
            if (!std::isfinite(l))
                throw DivergenceError("training loss diverged at epoch " + std::to_string(epoch),
                                      epoch);
            epoch_loss += l;
            ++batches;
        }
        last_loss = epoch_loss / static_cast<double>(batches);
    }

    EvaluationResult r;
    r.error = net.test_error(dataset.test);
    r.wall_time = std::chrono::steady_clock::now() - t0;
    r.metadata["final_train_loss"] = std::to_string(last_loss);
    r.metadata["epochs"] = std::to_string(hyper.epochs);
    r.metadata["activation"] = to_string(hyper.activation);
    return r;
}

} // namespace nndse
