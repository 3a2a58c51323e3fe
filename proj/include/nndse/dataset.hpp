#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace nndse {

// One labeled image set; pixels row-major per sample, scaled to [0, 1].
struct LabeledImages {
    int channels = 1;
    int height = 0;
    int width = 0;
    std::vector<double> images; // count * channels*height*width
    std::vector<std::uint8_t> labels;

    std::size_t count() const { return labels.size(); }
    int sample_size() const { return channels * height * width; }
    const double* sample(std::size_t i) const { return images.data() + i * sample_size(); }
};

struct Dataset {
    LabeledImages train;
    LabeledImages test;
    int num_classes = 0;

    int channels() const { return train.channels; }
    int height() const { return train.height; }
    int width() const { return train.width; }
};

// Big-endian IDX container (the MNIST distribution format). Images magic
// 0x00000803, labels magic 0x00000801. Labels are validated against
// num_classes when > 0. Throws FormatError with the byte offset on damage.
LabeledImages load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path,
                       std::optional<std::size_t> limit = std::nullopt, int num_classes = 0);

void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              const LabeledImages& data);

Dataset load_idx_dataset(const std::filesystem::path& train_images,
                         const std::filesystem::path& train_labels,
                         const std::filesystem::path& test_images,
                         const std::filesystem::path& test_labels, int num_classes,
                         std::optional<std::size_t> train_limit = std::nullopt,
                         std::optional<std::size_t> test_limit = std::nullopt);

// Deterministic 28x28 ten-class digit-glyph benchmark: pixel-font glyphs with
// random placement, intensity, noise and occlusion. A stand-in with the same
// shape and container format as MNIST for environments without the real files.
Dataset make_digit_dataset(std::size_t train_count, std::size_t test_count, std::uint64_t seed);

// Two linearly separable 2-d Gaussian blobs; the trainer sanity oracle.
Dataset make_blob_dataset(std::size_t train_count, std::size_t test_count, std::uint64_t seed);

} // namespace nndse
