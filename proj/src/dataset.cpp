#include "nndse/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <string>

#include "nndse/errors.hpp"
#include "nndse/rng.hpp"

namespace nndse {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32be(std::istream& is, const std::string& file, std::size_t offset) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    if (!is)
        throw FormatError(file + ": truncated at byte " + std::to_string(offset));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_u32be(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{static_cast<unsigned char>(v >> 24),
                                   static_cast<unsigned char>(v >> 16),
                                   static_cast<unsigned char>(v >> 8),
                                   static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

} // namespace

LabeledImages load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path,
                       std::optional<std::size_t> limit, int num_classes) {
    std::ifstream imf(images_path, std::ios::binary);
    if (!imf) throw FormatError("cannot open " + images_path.string());
    std::ifstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw FormatError("cannot open " + labels_path.string());

    const std::string imname = images_path.string();
    const std::string lbname = labels_path.string();

    std::uint32_t magic = read_u32be(imf, imname, 0);
    if (magic != kImagesMagic)
        throw FormatError(imname + ": bad magic 0x" + std::to_string(magic) + " at byte 0");
    std::uint32_t n_images = read_u32be(imf, imname, 4);
    std::uint32_t rows = read_u32be(imf, imname, 8);
    std::uint32_t cols = read_u32be(imf, imname, 12);

    std::uint32_t lmagic = read_u32be(lbf, lbname, 0);
    if (lmagic != kLabelsMagic)
        throw FormatError(lbname + ": bad magic 0x" + std::to_string(lmagic) + " at byte 0");
    std::uint32_t n_labels = read_u32be(lbf, lbname, 4);
    if (n_images != n_labels)
        throw FormatError(imname + ": item count " + std::to_string(n_images) +
                          " != label count " + std::to_string(n_labels));

    std::size_t n = n_images;
    if (limit) n = std::min(n, *limit);

    LabeledImages out;
    out.channels = 1;
    out.height = static_cast<int>(rows);
    out.width = static_cast<int>(cols);

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    out.images.resize(n * pixels);
    for (std::size_t i = 0; i < n; ++i) {
        imf.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (!imf)
            throw FormatError(imname + ": truncated at byte " + std::to_string(16 + i * pixels));
        double* dst = out.images.data() + i * pixels;
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = buf[p] / 255.0;
    }
    out.labels.resize(n);
    lbf.read(reinterpret_cast<char*>(out.labels.data()), static_cast<std::streamsize>(n));
    if (!lbf) throw FormatError(lbname + ": truncated at byte 8");
    if (num_classes > 0) {
        for (std::size_t i = 0; i < n; ++i)
            if (out.labels[i] >= num_classes)
                throw FormatError(lbname + ": label " + std::to_string(out.labels[i]) +
                                  " out of range at item " + std::to_string(i));
    }
    return out;
}

void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              const LabeledImages& data) {
    std::ofstream imf(images_path, std::ios::binary);
    if (!imf) throw FormatError("cannot create " + images_path.string());
    std::ofstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw FormatError("cannot create " + labels_path.string());

    write_u32be(imf, kImagesMagic);
    write_u32be(imf, static_cast<std::uint32_t>(data.count()));
    write_u32be(imf, static_cast<std::uint32_t>(data.height));
    write_u32be(imf, static_cast<std::uint32_t>(data.width));
    const std::size_t pixels = static_cast<std::size_t>(data.height) * data.width;
    std::vector<unsigned char> buf(pixels);
    for (std::size_t i = 0; i < data.count(); ++i) {
        const double* src = data.sample(i);
        for (std::size_t p = 0; p < pixels; ++p)
            buf[p] = static_cast<unsigned char>(std::clamp(src[p], 0.0, 1.0) * 255.0 + 0.5);
        imf.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(pixels));
    }

    write_u32be(lbf, kLabelsMagic);
    write_u32be(lbf, static_cast<std::uint32_t>(data.count()));
    lbf.write(reinterpret_cast<const char*>(data.labels.data()),
              static_cast<std::streamsize>(data.count()));
}

Dataset load_idx_dataset(const std::filesystem::path& train_images,
                         const std::filesystem::path& train_labels,
                         const std::filesystem::path& test_images,
                         const std::filesystem::path& test_labels, int num_classes,
                         std::optional<std::size_t> train_limit,
                         std::optional<std::size_t> test_limit) {
    Dataset d;
    d.train = load_idx(train_images, train_labels, train_limit, num_classes);
    d.test = load_idx(test_images, test_labels, test_limit, num_classes);
    d.num_classes = num_classes;
    if (d.train.height != d.test.height || d.train.width != d.test.width)
        throw FormatError("train/test image dimensions differ");
    return d;
}

namespace {

// 7x7 pixel-font glyphs for digits 0-9.
const char* const kGlyphs[10][7] = {
    {"0111110", "1100011", "1100011", "1100011", "1100011", "1100011", "0111110"},
    {"0011000", "0111000", "0011000", "0011000", "0011000", "0011000", "0111110"},
    {"0111110", "1100011", "0000011", "0001110", "0111000", "1100000", "1111111"},
    {"0111110", "1100011", "0000011", "0011110", "0000011", "1100011", "0111110"},
    {"0001110", "0011010", "0110010", "1100010", "1111111", "0000010", "0000010"},
    {"1111111", "1100000", "1111110", "0000011", "0000011", "1100011", "0111110"},
    {"0011110", "0110000", "1100000", "1111110", "1100011", "1100011", "0111110"},
    {"1111111", "0000011", "0000110", "0001100", "0011000", "0110000", "0110000"},
    {"0111110", "1100011", "1100011", "0111110", "1100011", "1100011", "0111110"},
    {"0111110", "1100011", "1100011", "0111111", "0000011", "0000110", "0111100"},
};

void render_digit(int digit, Rng& rng, double* out28x28, std::uint8_t* label) {
    std::fill(out28x28, out28x28 + 784, 0.0);
    int ox = static_cast<int>(rng.uniform_index(8));
    int oy = static_cast<int>(rng.uniform_index(8));
    double intensity = 0.6 + 0.4 * rng.uniform();
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 7; ++c) {
            if (kGlyphs[digit][r][c] != '1') continue;
            for (int dr = 0; dr < 3; ++dr)
                for (int dc = 0; dc < 3; ++dc)
                    out28x28[(oy + 3 * r + dr) * 28 + (ox + 3 * c + dc)] = intensity;
        }
    // Occlusion block plus pixel noise keep the task from being trivial.
    int bx = static_cast<int>(rng.uniform_index(25));
    int by = static_cast<int>(rng.uniform_index(25));
    for (int dr = 0; dr < 4; ++dr)
        for (int dc = 0; dc < 4; ++dc) out28x28[(by + dr) * 28 + (bx + dc)] = 0.0;
    for (int p = 0; p < 784; ++p)
        out28x28[p] = std::clamp(out28x28[p] + 0.15 * rng.normal(), 0.0, 1.0);
    *label = static_cast<std::uint8_t>(digit);
}

LabeledImages make_digits(std::size_t count, Rng& rng) {
    LabeledImages d;
    d.channels = 1;
    d.height = 28;
    d.width = 28;
    d.images.resize(count * 784);
    d.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        int digit = static_cast<int>(rng.uniform_index(10));
        render_digit(digit, rng, d.images.data() + i * 784, &d.labels[i]);
    }
    return d;
}

} // namespace

Dataset make_digit_dataset(std::size_t train_count, std::size_t test_count, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.train = make_digits(train_count, rng);
    d.test = make_digits(test_count, rng);
    d.num_classes = 10;
    return d;
}

Dataset make_blob_dataset(std::size_t train_count, std::size_t test_count, std::uint64_t seed) {
    Rng rng(seed);
    auto make = [&](std::size_t count) {
        LabeledImages d;
        d.channels = 1;
        d.height = 1;
        d.width = 2;
        d.images.resize(count * 2);
        d.labels.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            int cls = static_cast<int>(rng.uniform_index(2));
            double cx = cls == 0 ? 0.25 : 0.75;
            double cy = cls == 0 ? 0.75 : 0.25;
            d.images[2 * i] = cx + 0.08 * rng.normal();
            d.images[2 * i + 1] = cy + 0.08 * rng.normal();
            d.labels[i] = static_cast<std::uint8_t>(cls);
        }
        return d;
    };
    Dataset d;
    d.train = make(train_count);
    d.test = make(test_count);
    d.num_classes = 2;
    return d;
}

} // namespace nndse
