#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "nndse/errors.hpp"
#include "nndse/pareto.hpp"
#include "nndse/rng.hpp"

using namespace nndse;

namespace {

std::vector<ObjectivePoint> random_points(Rng& rng, std::size_t n) {
    std::vector<ObjectivePoint> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({0.01 + 0.99 * rng.uniform(), 1.0 + 1000.0 * rng.uniform(),
                       "p" + std::to_string(i)});
    return pts;
}

bool same_points(const ParetoFront& a, const ParetoFront& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a.points()[i] == b.points()[i])) return false;
    return true;
}

} // namespace

TEST_CASE("dominates follows the strict definition") {
    CHECK(dominates({0.1, 100, "a"}, {0.2, 100, "b"}));
    CHECK_FALSE(dominates({0.1, 100, "a"}, {0.1, 100, "b"}));
    CHECK_FALSE(dominates({0.1, 200, "a"}, {0.2, 100, "b"}));
    CHECK(dominates({0.1, 100, "a"}, {0.1, 101, "b"}));
}

TEST_CASE("dominates is irreflexive and antisymmetric") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        ObjectivePoint a{rng.uniform(), rng.uniform() * 10, "a"};
        ObjectivePoint b{rng.uniform(), rng.uniform() * 10, "b"};
        CHECK_FALSE(dominates(a, a));
        CHECK_FALSE(dominates(a, b) && dominates(b, a));
    }
}

TEST_CASE("insert keeps the front minimal") {
    ParetoFront f;
    CHECK(f.insert({0.5, 100, "a"}));
    CHECK_FALSE(f.insert({0.6, 100, "worse"}));
    CHECK(f.size() == 1);

    // one point dominating two members shrinks the front
    ParetoFront g;
    g.insert({0.5, 100, "a"});
    g.insert({0.4, 200, "b"});
    g.insert({0.3, 300, "c"});
    CHECK(g.size() == 3);
    CHECK(g.insert({0.35, 90, "killer"})); // dominates a and b
    CHECK(g.size() == 2);

    // members stay sorted by cost with strictly descending errors
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        CHECK(g.points()[i].cost < g.points()[i + 1].cost);
        CHECK(g.points()[i].error > g.points()[i + 1].error);
    }
}

TEST_CASE("equal objectives deduplicate to the lowest config_id") {
    ParetoFront f;
    CHECK(f.insert({0.5, 100, "bbb"}));
    CHECK(f.insert({0.5, 100, "aaa"}));
    CHECK_FALSE(f.insert({0.5, 100, "ccc"}));
    REQUIRE(f.size() == 1);
    CHECK(f.points()[0].config_id == "aaa");
}

TEST_CASE("front_of basics") {
    std::vector<ObjectivePoint> empty;
    CHECK(front_of(empty).empty());

    std::vector<ObjectivePoint> same{{0.2, 5, "c"}, {0.2, 5, "a"}, {0.2, 5, "b"}};
    ParetoFront f = front_of(same);
    REQUIRE(f.size() == 1);
    CHECK(f.points()[0].config_id == "a");

    std::vector<ObjectivePoint> pts{
        {0.1, 300, "w"}, {0.2, 100, "x"}, {0.15, 200, "y"}, {0.2, 150, "z"}};
    f = front_of(pts);
    REQUIRE(f.size() == 3);
    CHECK(f.points()[0].cost == 100);
    CHECK(f.points()[1].cost == 200);
    CHECK(f.points()[2].cost == 300);
}

TEST_CASE("insert-stream equals brute-force front on random sets") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ObjectivePoint> pts = random_points(rng, 1000);
        ParetoFront incremental;
        for (const auto& p : pts) incremental.insert(p);
        CHECK(same_points(incremental, front_of(pts)));
    }
}

TEST_CASE("delta golden values") {
    ObjectivePoint r{0.10, 100, "r"};
    CHECK(delta(r, r) == 0.0);
    CHECK(delta(r, {0.12, 90, "a"}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(delta(r, {0.05, 50, "dominating"}) == 0.0);
    CHECK_THROWS_AS(delta({0.0, 100, "bad"}, r), NormalizationError);
    CHECK_THROWS_AS(delta({0.1, 0.0, "bad"}, r), NormalizationError);
}

TEST_CASE("adrs golden values and validation") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        ParetoFront f = front_of(random_points(rng, 100));
        CHECK(adrs(f, f) == 0.0);
    }

    ParetoFront exact, approx;
    exact.insert({0.10, 100, "r"});
    approx.insert({0.12, 90, "a"});
    CHECK(adrs(exact, approx) == doctest::Approx(0.2).epsilon(1e-12));

    ParetoFront empty;
    CHECK_THROWS_AS(adrs(empty, approx), ValidationError);
    CHECK_THROWS_AS(adrs(exact, empty), ValidationError);
}

TEST_CASE("adrs superset inequality") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        ParetoFront exact = front_of(random_points(rng, 200));
        std::vector<ObjectivePoint> a = random_points(rng, 50);
        std::vector<ObjectivePoint> b = random_points(rng, 50);
        std::vector<ObjectivePoint> both = a;
        both.insert(both.end(), b.begin(), b.end());
        double ab = adrs(exact, front_of(both));
        CHECK(ab <= adrs(exact, front_of(a)) + 1e-15);
        CHECK(ab <= adrs(exact, front_of(b)) + 1e-15);
    }
}

TEST_CASE("front csv round-trips") {
    Rng rng(5);
    ParetoFront f = front_of(random_points(rng, 300));
    std::stringstream ss;
    write_front_csv(ss, f);
    ParetoFront back = read_front_csv(ss);
    CHECK(same_points(f, back));
}

TEST_CASE("front csv reports malformed lines") {
    std::stringstream ss("config_id,error,cost\nid1,0.5,100\nbroken-line\n");
    try {
        read_front_csv(ss);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}
