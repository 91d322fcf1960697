#pragma once

#include <string>
#include <vector>

#include "advhash/hashing.hpp"
#include "advhash/tensor.hpp"

namespace advhash {

enum class LayerKind { conv, pool, fc };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

struct LayerDesc {
    LayerKind kind = LayerKind::fc;
    std::size_t units = 0;    // conv: output channels, fc: width
    std::size_t kernel = 0;   // conv: kernel size, pool: window
    std::size_t stride = 1;
    std::size_t padding = 0;  // conv only
    Activation activation = Activation::none;
    CompressionRate hash_rate;  // 1/1 means dense storage

    bool has_params() const { return kind != LayerKind::pool; }
    bool hashed() const { return has_params() && !hash_rate.dense(); }

    friend bool operator==(const LayerDesc&, const LayerDesc&) = default;
};

/// Ordered layer topology. Layer indices used throughout the toolkit (defense
/// targets, histogram selectors, checkpoint sections) are positions in
/// `layers`. A fully connected layer flattens whatever precedes it.
struct ArchitectureSpec {
    std::string name;
    Shape input_shape;  // [C, H, W]
    std::vector<LayerDesc> layers;

    // Output shape of every layer; throws ConfigError naming the first layer
    // whose shape does not fit.
    std::vector<Shape> shape_chain() const;
    void validate() const { (void)shape_chain(); }

    std::size_t classes() const;
    std::size_t input_size() const { return shape_size(input_shape); }

    // Virtual weight shape of a parameter layer.
    Shape weight_shape(std::size_t layer) const;

    std::size_t last_fc_index() const;

    // Canonical text; parse_architecture(to_text()) reproduces the spec.
    std::string to_text() const;

    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

// One layer per line:
//   name <id>
//   input <C> <H> <W>
//   conv <out_channels> [kernel=K] [stride=S] [pad=P] [act=relu|none] [hash=a/b]
//   pool <window> [stride=S]
//   fc <width> [act=relu|none] [hash=a/b]
// '#' starts a comment. Throws ConfigError naming the line for syntax errors
// and the layer for shape errors.
ArchitectureSpec parse_architecture(const std::string& text);

// mnist-ref, dnn1, dnn2, dnn3, vgg16.
std::vector<std::string> preset_names();
ArchitectureSpec preset_architecture(const std::string& name);

// A preset name, or otherwise a path to an architecture text file.
ArchitectureSpec load_architecture(const std::string& preset_or_path);

// Sets the hash rate of every fc (and optionally conv) layer.
ArchitectureSpec with_hash_rate(ArchitectureSpec spec, CompressionRate rate, bool include_conv = false);

}  // namespace advhash
