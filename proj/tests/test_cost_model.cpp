#include <doctest.h>

#include <vector>

#include "nndse/cost_model.hpp"
#include "nndse/errors.hpp"
#include "nndse/rng.hpp"

using namespace nndse;

namespace {

// Independent oracle: literally count multiplications by walking every output
// position of every layer.
OpCounts brute_force_counts(const Topology& t) {
    OpCounts c;
    int ch = t.input.channels, h = t.input.height, w = t.input.width;
    for (const auto& l : t.conv_layers) {
        int oh = h - l.kernel + 1, ow = w - l.kernel + 1;
        std::uint64_t weights = 0, macs = 0;
        for (int f = 0; f < l.filters; ++f)
            for (int ci = 0; ci < ch; ++ci)
                for (int ky = 0; ky < l.kernel; ++ky)
                    for (int kx = 0; kx < l.kernel; ++kx) {
                        ++weights;
                        for (int y = 0; y < oh; ++y)
                            for (int x = 0; x < ow; ++x) ++macs;
                    }
        c.weights += weights;
        c.macs += macs;
        ch = l.filters;
        h = oh / l.pool;
        w = ow / l.pool;
    }
    std::vector<int> sizes;
    sizes.push_back(ch * h * w);
    for (int n : t.fc_layers) sizes.push_back(n);
    sizes.push_back(t.output_nodes);
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
        for (int a = 0; a < sizes[i]; ++a)
            for (int b = 0; b < sizes[i + 1]; ++b) {
                ++c.weights;
                ++c.macs;
            }
    return c;
}

} // namespace

TEST_CASE("mlp_counts golden values") {
    std::vector<int> sizes{784, 20, 10};
    OpCounts c = mlp_counts(sizes);
    CHECK(c.weights == 15880);
    CHECK(c.macs == 15880);

    std::vector<int> tiny{1, 1};
    c = mlp_counts(tiny);
    CHECK(c.weights == 1);
    CHECK(c.macs == 1);
}

TEST_CASE("mlp_counts validation") {
    std::vector<int> empty;
    CHECK_THROWS_AS(mlp_counts(empty), ValidationError);
    std::vector<int> one{5};
    CHECK_THROWS_AS(mlp_counts(one), ValidationError);
    std::vector<int> zero{5, 0};
    CHECK_THROWS_AS(mlp_counts(zero), ValidationError);
}

TEST_CASE("mlp_counts matches product-sum oracle on random stacks") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t layers = 2 + rng.uniform_index(4);
        std::vector<int> sizes;
        std::uint64_t expect = 0;
        for (std::size_t i = 0; i < layers; ++i)
            sizes.push_back(1 + static_cast<int>(rng.uniform_index(40)));
        for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
            expect += static_cast<std::uint64_t>(sizes[i]) * sizes[i + 1];
        OpCounts c = mlp_counts(sizes);
        CHECK(c.weights == expect);
        CHECK(c.macs == expect);
    }
}

TEST_CASE("cnn_counts hand-counted example") {
    // (1,6,6) input, one conv layer F=5 N=3 K=2, no hidden FC, 10 outputs:
    // conv weights 45, conv output 4x4 -> 720 macs, pooled 2x2 -> flatten 20,
    // FC 20x10 -> 200/200.
    Topology t;
    t.input = {1, 6, 6};
    t.conv_layers = {{5, 3, 2}};
    t.output_nodes = 10;
    OpCounts c = cnn_counts(t);
    CHECK(c.weights == 245);
    CHECK(c.macs == 920);
}

TEST_CASE("cnn_counts 1x1 conv is a per-pixel scale") {
    Topology t;
    t.input = {1, 7, 5};
    t.conv_layers = {{1, 1, 1}};
    t.output_nodes = 1;
    OpCounts c = cnn_counts(t);
    // conv: 1 weight, 35 macs; fc: 35 weights, 35 macs
    CHECK(c.weights == 1 + 35);
    CHECK(c.macs == 35 + 35);
}

TEST_CASE("cnn_counts infeasible topologies") {
    Topology t;
    t.input = {1, 4, 4};
    t.conv_layers = {{2, 5, 1}};
    t.output_nodes = 10;
    CHECK_THROWS_AS(cnn_counts(t), InfeasibleTopologyError);

    // pooling that empties the map
    t.conv_layers = {{2, 3, 3}};
    CHECK_THROWS_AS(cnn_counts(t), InfeasibleTopologyError);
}

TEST_CASE("cnn_counts with no conv layers equals mlp_counts") {
    Topology t;
    t.input = {3, 4, 4};
    t.fc_layers = {17, 9};
    t.output_nodes = 10;
    std::vector<int> sizes{48, 17, 9, 10};
    CHECK(cnn_counts(t) == mlp_counts(sizes));
}

TEST_CASE("cnn_counts matches brute-force oracle on random topologies") {
    Rng rng(7);
    int done = 0;
    while (done < 25) {
        Topology t;
        t.input = {1 + static_cast<int>(rng.uniform_index(3)),
                   6 + static_cast<int>(rng.uniform_index(8)),
                   6 + static_cast<int>(rng.uniform_index(8))};
        std::size_t convs = rng.uniform_index(3);
        for (std::size_t i = 0; i < convs; ++i)
            t.conv_layers.push_back({1 + static_cast<int>(rng.uniform_index(6)),
                                     1 + static_cast<int>(rng.uniform_index(3)),
                                     1 + static_cast<int>(rng.uniform_index(2))});
        std::size_t fcs = rng.uniform_index(3);
        for (std::size_t i = 0; i < fcs; ++i)
            t.fc_layers.push_back(1 + static_cast<int>(rng.uniform_index(30)));
        t.output_nodes = 1 + static_cast<int>(rng.uniform_index(10));
        OpCounts fast;
        try {
            fast = cnn_counts(t);
        } catch (const InfeasibleTopologyError&) {
            continue;
        }
        CHECK(fast == brute_force_counts(t));
        ++done;
    }
}

TEST_CASE("monotonicity: widening or deepening increases counts") {
    Topology base;
    base.input = {1, 12, 12};
    base.conv_layers = {{4, 3, 2}};
    base.fc_layers = {20};
    base.output_nodes = 10;
    OpCounts b = cnn_counts(base);

    Topology wider = base;
    wider.conv_layers[0].filters += 1;
    CHECK(cnn_counts(wider).weights > b.weights);
    CHECK(cnn_counts(wider).macs > b.macs);

    Topology taller = base;
    taller.fc_layers[0] += 1;
    CHECK(cnn_counts(taller).weights > b.weights);

    Topology deeper = base;
    deeper.fc_layers.push_back(5);
    CHECK(cnn_counts(deeper).weights > b.weights);
    CHECK(cnn_counts(deeper).macs > b.macs);
}

TEST_CASE("total_cost golden values and linearity") {
    CostParams table1; // 139 / 1
    CHECK(total_cost({15880, 15880}, table1) == 2223200.0);
    CHECK(total_cost({0, 0}, table1) == 0.0);
    CHECK(total_cost({1, 0}, table1) == 139.0);
    CHECK(total_cost({0, 1}, table1) == 1.0);

    CostParams halved{69.5, 0.5};
    CHECK(total_cost({100, 40}, halved) == doctest::Approx(0.5 * total_cost({100, 40}, table1)));

    Topology t;
    t.input = InputShape::flat_size(784);
    t.fc_layers = {20};
    t.output_nodes = 10;
    CostBreakdown bd = cost_breakdown(t, table1);
    CHECK(bd.num_weights == 15880);
    CHECK(bd.num_macs == 15880);
    CHECK(bd.total == 2223200.0);
}
