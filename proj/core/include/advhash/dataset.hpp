#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advhash/tensor.hpp"

namespace advhash {

/// Images [N, C, H, W] scaled to [0, 1] with one integer label per image.
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    std::size_t classes = 10;

    std::size_t size() const noexcept { return labels.size(); }
    Shape sample_shape() const;
    std::size_t sample_size() const;

    Tensor sample(std::size_t index) const;
    Tensor batch(std::span<const std::size_t> indices) const;
    Dataset subset(std::span<const std::size_t> indices) const;
    // First `n` samples (or all, if fewer).
    Dataset head(std::size_t n) const;

    // Throws FormatError unless counts agree, labels lie in [0, classes) and
    // pixels lie in [0, 1].
    void validate(const std::string& what = "dataset") const;
};

// IDX (big-endian) MNIST files: images magic 2051, labels magic 2049.
Dataset load_mnist(const std::string& images_path, const std::string& labels_path);
Dataset parse_mnist(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes);

// CIFAR-10 binary batches: 3073-byte records (label, then R, G, B planes of
// 32x32 bytes).
Dataset load_cifar10(const std::vector<std::string>& batch_paths);
Dataset parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source = "cifar10");

// Train split (data_batch_1..5.bin) or test split (test_batch.bin) of an
// extracted cifar-10-batches-bin directory.
Dataset load_cifar10_dir(const std::string& dir, bool train);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace advhash
