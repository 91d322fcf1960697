#include "advhash/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "advhash/error.hpp"

namespace advhash {

Shape Dataset::sample_shape() const {
    return Shape(images.shape().begin() + 1, images.shape().end());
}

std::size_t Dataset::sample_size() const {
    return size() == 0 ? 0 : images.size() / size();
}

Tensor Dataset::sample(std::size_t index) const {
    return images.slice(index);
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
    const std::size_t d = sample_size();
    Shape shape = images.shape();
    shape[0] = indices.size();
    std::vector<double> data(indices.size() * d);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw ConfigError("dataset index " + std::to_string(indices[i]) + " out of range");
        std::copy_n(images.raw() + indices[i] * d, d, data.data() + i * d);
    }
    return Tensor(std::move(shape), std::move(data));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.images = batch(indices);
    out.classes = classes;
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels[i]);
    return out;
}

Dataset Dataset::head(std::size_t n) const {
    n = std::min(n, size());
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return subset(idx);
}

void Dataset::validate(const std::string& what) const {
    if (size() == 0) throw FormatError(what, "no samples");
    if (images.rank() != 4 || images.dim(0) != size())
        throw FormatError(what, "image tensor " + shape_string(images.shape()) + " does not hold " +
                                    std::to_string(size()) + " samples");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw FormatError(what, "label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                                        " outside [0, " + std::to_string(classes) + ")");
    for (double v : images.data())
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError(what, "pixel value outside [0, 1]");
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError(path, "cannot open file");
    f.seekg(0, std::ios::end);
    const auto n = f.tellg();
    if (n < 0) throw FormatError(path, "cannot determine file size");
    f.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
    if (n > 0 && !f.read(reinterpret_cast<char*>(bytes.data()), n)) throw FormatError(path, "read failed");
    return bytes;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off, const std::string& section) {
    if (off + 4 > b.size()) throw FormatError(section, "truncated header");
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

// Division (not multiplication by 1/255) so that 255 maps to exactly 1.0.
inline double byte_to_unit(std::uint8_t b) { return b / 255.0; }

}  // namespace

Dataset parse_mnist(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
    const std::uint32_t img_magic = read_be32(image_bytes, 0, "IDX image header");
    if (img_magic != 2051)
        throw FormatError("IDX image header", "magic " + std::to_string(img_magic) + " (expected 2051)");
    const std::uint32_t lbl_magic = read_be32(label_bytes, 0, "IDX label header");
    if (lbl_magic != 2049)
        throw FormatError("IDX label header", "magic " + std::to_string(lbl_magic) + " (expected 2049)");

    const std::size_t n = read_be32(image_bytes, 4, "IDX image header");
    const std::size_t rows = read_be32(image_bytes, 8, "IDX image header");
    const std::size_t cols = read_be32(image_bytes, 12, "IDX image header");
    const std::size_t n_labels = read_be32(label_bytes, 4, "IDX label header");
    if (n != n_labels)
        throw FormatError("IDX", std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
    if (n == 0 || rows == 0 || cols == 0) throw FormatError("IDX image header", "zero-sized dimension");
    const std::size_t pixels = n * rows * cols;
    if (image_bytes.size() - 16 < pixels)
        throw FormatError("IDX image data", "truncated: need " + std::to_string(pixels) + " bytes, have " +
                                                std::to_string(image_bytes.size() - 16));
    if (label_bytes.size() - 8 < n)
        throw FormatError("IDX label data", "truncated: need " + std::to_string(n) + " bytes, have " +
                                                std::to_string(label_bytes.size() - 8));

    Dataset ds;
    std::vector<double> data(pixels);
    for (std::size_t i = 0; i < pixels; ++i) data[i] = byte_to_unit(image_bytes[16 + i]);
    ds.images = Tensor({n, 1, rows, cols}, std::move(data));
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto l = label_bytes[8 + i];
        if (l > 9) throw FormatError("IDX label data", "label " + std::to_string(l) + " at index " + std::to_string(i));
        ds.labels[i] = l;
    }
    ds.classes = 10;
    return ds;
}

Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file_bytes(images_path);
    const auto lbl = read_file_bytes(labels_path);
    try {
        return parse_mnist(img, lbl);
    } catch (const FormatError& e) {
        const std::string what = std::string(e.what()).substr(e.section().size() + 2);
        throw FormatError(e.section(), what + " [" + images_path + ", " + labels_path + "]");
    }
}

Dataset parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPixels = 3072;
    if (bytes.empty() || bytes.size() % kRecord != 0)
        throw FormatError(source, "size " + std::to_string(bytes.size()) + " is not a positive multiple of 3073");
    const std::size_t n = bytes.size() / kRecord;
    Dataset ds;
    ds.classes = 10;
    ds.labels.resize(n);
    std::vector<double> data(n * kPixels);
    for (std::size_t r = 0; r < n; ++r) {
        const auto* rec = bytes.data() + r * kRecord;
        if (rec[0] > 9)
            throw FormatError(source, "record " + std::to_string(r) + " has label byte " + std::to_string(rec[0]));
        ds.labels[r] = rec[0];
        for (std::size_t p = 0; p < kPixels; ++p) data[r * kPixels + p] = byte_to_unit(rec[1 + p]);
    }
    ds.images = Tensor({n, 3, 32, 32}, std::move(data));
    return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
    if (batch_paths.empty()) throw FormatError("cifar10", "no batch files given");
    std::vector<std::uint8_t> all;
    for (const auto& p : batch_paths) {
        const auto bytes = read_file_bytes(p);
        if (bytes.size() % 3073 != 0)
            throw FormatError(p, "size " + std::to_string(bytes.size()) + " is not a multiple of 3073");
        all.insert(all.end(), bytes.begin(), bytes.end());
    }
    return parse_cifar10(all, batch_paths.size() == 1 ? batch_paths[0] : "cifar10 batches");
}

Dataset load_cifar10_dir(const std::string& dir, bool train) {
    namespace fs = std::filesystem;
    std::vector<std::string> paths;
    if (train) {
        for (int i = 1; i <= 5; ++i) paths.push_back((fs::path(dir) / ("data_batch_" + std::to_string(i) + ".bin")).string());
    } else {
        paths.push_back((fs::path(dir) / "test_batch.bin").string());
    }
    return load_cifar10(paths);
}

}  // namespace advhash
