#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nndse/dataset.hpp"
#include "nndse/errors.hpp"

using namespace nndse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nndse_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("idx round-trip preserves shape, labels and quantized pixels") {
    TempDir tmp;
    Dataset d = make_digit_dataset(64, 0, 99);
    save_idx(tmp.path / "im.idx", tmp.path / "lb.idx", d.train);
    LabeledImages back = load_idx(tmp.path / "im.idx", tmp.path / "lb.idx", std::nullopt, 10);
    REQUIRE(back.count() == 64);
    CHECK(back.height == 28);
    CHECK(back.width == 28);
    CHECK(back.labels == d.train.labels);
    for (std::size_t i = 0; i < back.images.size(); ++i)
        CHECK(std::abs(back.images[i] - d.train.images[i]) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("idx limit truncates") {
    TempDir tmp;
    Dataset d = make_digit_dataset(50, 0, 1);
    save_idx(tmp.path / "im.idx", tmp.path / "lb.idx", d.train);
    LabeledImages lim = load_idx(tmp.path / "im.idx", tmp.path / "lb.idx", 7);
    CHECK(lim.count() == 7);
}

TEST_CASE("idx bad magic, truncation and label range") {
    TempDir tmp;
    Dataset d = make_digit_dataset(8, 0, 2);
    save_idx(tmp.path / "im.idx", tmp.path / "lb.idx", d.train);

    // corrupt the image magic
    {
        std::fstream f(tmp.path / "im.idx",
                       std::ios::in | std::ios::out | std::ios::binary);
        f.put(0x7f);
    }
    CHECK_THROWS_AS(load_idx(tmp.path / "im.idx", tmp.path / "lb.idx"), FormatError);

    save_idx(tmp.path / "im.idx", tmp.path / "lb.idx", d.train);
    fs::resize_file(tmp.path / "im.idx", 16 + 3 * 784 + 100); // cut mid-image
    try {
        load_idx(tmp.path / "im.idx", tmp.path / "lb.idx");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }

    // a label beyond num_classes
    save_idx(tmp.path / "im.idx", tmp.path / "lb.idx", d.train);
    {
        std::fstream f(tmp.path / "lb.idx",
                       std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8 + 3);
        f.put(10);
    }
    CHECK_THROWS_AS(load_idx(tmp.path / "im.idx", tmp.path / "lb.idx", std::nullopt, 10),
                    FormatError);
}

TEST_CASE("digit dataset is deterministic and balanced enough") {
    Dataset a = make_digit_dataset(500, 100, 4);
    Dataset b = make_digit_dataset(500, 100, 4);
    CHECK(a.train.images == b.train.images);
    CHECK(a.test.labels == b.test.labels);
    CHECK(a.num_classes == 10);

    std::array<int, 10> hist{};
    for (auto l : a.train.labels) ++hist[l];
    for (int count : hist) CHECK(count > 20);

    Dataset c = make_digit_dataset(500, 100, 5);
    CHECK(a.train.images != c.train.images);
}

TEST_CASE("load_idx_dataset composes splits") {
    TempDir tmp;
    Dataset d = make_digit_dataset(30, 12, 8);
    save_idx(tmp.path / "tri.idx", tmp.path / "trl.idx", d.train);
    save_idx(tmp.path / "tei.idx", tmp.path / "tel.idx", d.test);
    Dataset back = load_idx_dataset(tmp.path / "tri.idx", tmp.path / "trl.idx",
                                    tmp.path / "tei.idx", tmp.path / "tel.idx", 10, 20);
    CHECK(back.train.count() == 20);
    CHECK(back.test.count() == 12);
    CHECK(back.num_classes == 10);
}

TEST_CASE("blob dataset is separable by construction") {
    Dataset d = make_blob_dataset(200, 50, 3);
    int consistent = 0;
    for (std::size_t i = 0; i < d.train.count(); ++i) {
        const double* s = d.train.sample(i);
        bool looks_class1 = s[0] > s[1];
        if (looks_class1 == (d.train.labels[i] == 1)) ++consistent;
    }
    CHECK(consistent > 195);
}
