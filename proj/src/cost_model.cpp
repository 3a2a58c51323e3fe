#include "nndse/cost_model.hpp"

#include <string>

#include "nndse/errors.hpp"

namespace nndse {

OpCounts mlp_counts(std::span<const int> layer_sizes) {
    if (layer_sizes.size() < 2)
        throw ValidationError("mlp_counts: need at least two layers");
    for (int n : layer_sizes)
        if (n < 1) throw ValidationError("mlp_counts: layer size must be >= 1");
    OpCounts c;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
        std::uint64_t w =
            static_cast<std::uint64_t>(layer_sizes[i]) * static_cast<std::uint64_t>(layer_sizes[i + 1]);
        c.weights += w;
        c.macs += w;
    }
    return c;
}

OpCounts cnn_counts(const Topology& t) {
    if (t.input.channels < 1 || t.input.height < 1 || t.input.width < 1)
        throw ValidationError("cnn_counts: input dimensions must be positive");
    if (t.output_nodes < 1) throw ValidationError("cnn_counts: output_nodes must be >= 1");

    OpCounts c;
    int channels = t.input.channels;
    int h = t.input.height;
    int w = t.input.width;

    for (std::size_t i = 0; i < t.conv_layers.size(); ++i) {
        const ConvLayerSpec& layer = t.conv_layers[i];
        if (layer.filters < 1 || layer.kernel < 1 || layer.pool < 1)
            throw ValidationError("cnn_counts: conv layer dimensions must be positive");
        int oh = h - layer.kernel + 1;
        int ow = w - layer.kernel + 1;
        if (oh < 1 || ow < 1)
            throw InfeasibleTopologyError("conv layer " + std::to_string(i + 1) + ": kernel " +
                                          std::to_string(layer.kernel) + " exceeds input " +
                                          std::to_string(h) + "x" + std::to_string(w));
        std::uint64_t kernel_weights = static_cast<std::uint64_t>(layer.filters) * channels *
                                       layer.kernel * layer.kernel;
        c.weights += kernel_weights;
        c.macs += kernel_weights * static_cast<std::uint64_t>(oh) * static_cast<std::uint64_t>(ow);
        h = oh / layer.pool;
        w = ow / layer.pool;
        if (h < 1 || w < 1)
            throw InfeasibleTopologyError("conv layer " + std::to_string(i + 1) + ": pool " +
                                          std::to_string(layer.pool) + " empties output " +
                                          std::to_string(oh) + "x" + std::to_string(ow));
        channels = layer.filters;
    }

    std::vector<int> fc;
    fc.push_back(channels * h * w);
    fc.insert(fc.end(), t.fc_layers.begin(), t.fc_layers.end());
    fc.push_back(t.output_nodes);
    OpCounts fcc = mlp_counts(fc);
    c.weights += fcc.weights;
    c.macs += fcc.macs;
    return c;
}

double total_cost(const OpCounts& counts, const CostParams& params) {
    return static_cast<double>(counts.weights) * params.weight_unit_cost +
           static_cast<double>(counts.macs) * params.mac_unit_cost;
}

CostBreakdown cost_breakdown(const Topology& topology, const CostParams& params) {
    OpCounts c = cnn_counts(topology);
    return {c.weights, c.macs, total_cost(c, params)};
}

} // namespace nndse
