#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nndse {

struct InputShape {
    int channels = 1;
    int height = 1;
    int width = 1;

    int flat() const { return channels * height * width; }
    static InputShape flat_size(int n) { return {1, 1, n}; }
};

struct ConvLayerSpec {
    int filters = 1;
    int kernel = 1; // NxN, valid convolution, stride 1
    int pool = 1;   // KxK non-overlapping max-pool; 1 = none
};

struct Topology {
    InputShape input;
    std::vector<ConvLayerSpec> conv_layers;
    std::vector<int> fc_layers; // hidden layer widths
    int output_nodes = 1;
};

// Normalized unit costs (defaults: DRAM access 139, multiply-accumulate 1).
struct CostParams {
    double weight_unit_cost = 139.0;
    double mac_unit_cost = 1.0;
};

struct OpCounts {
    std::uint64_t weights = 0;
    std::uint64_t macs = 0;

    bool operator==(const OpCounts&) const = default;
};

struct CostBreakdown {
    std::uint64_t num_weights = 0;
    std::uint64_t num_macs = 0;
    double total = 0.0;
};

// Fully connected stack: each adjacent pair (a, b) contributes a*b weights and
// a*b multiply-accumulates. Biases are not counted.
OpCounts mlp_counts(std::span<const int> layer_sizes);

// Convolutional stack followed by the FC stack. Throws InfeasibleTopologyError
// when any spatial dimension underflows. Pooling contributes no weights or macs.
OpCounts cnn_counts(const Topology& topology);

double total_cost(const OpCounts& counts, const CostParams& params);

CostBreakdown cost_breakdown(const Topology& topology, const CostParams& params);

} // namespace nndse
