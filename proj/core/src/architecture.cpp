#include "advhash/architecture.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "advhash/error.hpp"
#include "advhash/kernels.hpp"

namespace advhash {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::pool: return "pool";
        case LayerKind::fc: return "fc";
    }
    return "?";
}

std::string to_string(Activation act) {
    return act == Activation::relu ? "relu" : "none";
}

namespace {

std::string layer_label(std::size_t index, const LayerDesc& d) {
    return "layer " + std::to_string(index) + " (" + to_string(d.kind) + ")";
}

}  // namespace

std::vector<Shape> ArchitectureSpec::shape_chain() const {
    if (input_shape.size() != 3 || shape_size(input_shape) == 0)
        throw ConfigError("architecture '" + name + "': input must be C H W with positive extents");
    if (layers.empty()) throw ConfigError("architecture '" + name + "': no layers");
    std::vector<Shape> chain;
    Shape cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& d = layers[i];
        const std::string where = "architecture '" + name + "', " + layer_label(i, d);
        if (d.has_params() && d.units == 0) throw ConfigError(where + ": width must be positive");
        switch (d.kind) {
            case LayerKind::conv:
            case LayerKind::pool: {
                if (cur.size() != 3) throw ConfigError(where + ": spatial layer after a fully connected layer");
                if (d.kernel == 0 || d.stride == 0) throw ConfigError(where + ": kernel and stride must be positive");
                const std::size_t pad = d.kind == LayerKind::conv ? d.padding : 0;
                if (d.kernel > cur[1] + 2 * pad || d.kernel > cur[2] + 2 * pad)
                    throw ConfigError(where + ": kernel " + std::to_string(d.kernel) + " exceeds input " +
                                      shape_string(cur));
                const std::size_t h = (cur[1] + 2 * pad - d.kernel) / d.stride + 1;
                const std::size_t w = (cur[2] + 2 * pad - d.kernel) / d.stride + 1;
                cur = {d.kind == LayerKind::conv ? d.units : cur[0], h, w};
                break;
            }
            case LayerKind::fc:
                cur = {d.units};
                break;
        }
        if (d.kind == LayerKind::pool && (!d.hash_rate.dense() || d.activation != Activation::none))
            throw ConfigError(where + ": pooling takes no activation or hash rate");
        chain.push_back(cur);
    }
    if (layers.back().kind != LayerKind::fc) throw ConfigError("architecture '" + name + "': last layer must be fc");
    return chain;
}

std::size_t ArchitectureSpec::classes() const {
    return shape_chain().back().at(0);
}

Shape ArchitectureSpec::weight_shape(std::size_t layer) const {
    const auto chain = shape_chain();
    if (layer >= layers.size() || !layers[layer].has_params())
        throw ConfigError("architecture '" + name + "': layer " + std::to_string(layer) + " has no weights");
    const Shape& in = layer == 0 ? input_shape : chain[layer - 1];
    const auto& d = layers[layer];
    if (d.kind == LayerKind::conv) return {d.units, in[0], d.kernel, d.kernel};
    return {d.units, shape_size(in)};
}

std::size_t ArchitectureSpec::last_fc_index() const {
    for (std::size_t i = layers.size(); i-- > 0;)
        if (layers[i].kind == LayerKind::fc) return i;
    throw ConfigError("architecture '" + name + "': no fully connected layer");
}

std::string ArchitectureSpec::to_text() const {
    std::ostringstream os;
    os << "name " << name << '\n';
    os << "input " << input_shape.at(0) << ' ' << input_shape.at(1) << ' ' << input_shape.at(2) << '\n';
    for (const auto& d : layers) {
        switch (d.kind) {
            case LayerKind::conv:
                os << "conv " << d.units << " kernel=" << d.kernel << " stride=" << d.stride << " pad=" << d.padding
                   << " act=" << to_string(d.activation) << " hash=" << d.hash_rate.str();
                break;
            case LayerKind::pool:
                os << "pool " << d.kernel << " stride=" << d.stride;
                break;
            case LayerKind::fc:
                os << "fc " << d.units << " act=" << to_string(d.activation) << " hash=" << d.hash_rate.str();
                break;
        }
        os << '\n';
    }
    return os.str();
}

namespace {

std::size_t parse_size(const std::string& s, const std::string& where) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(where + ": expected a non-negative integer, got '" + s + "'");
    return v;
}

}  // namespace

ArchitectureSpec parse_architecture(const std::string& text) {
    ArchitectureSpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_input = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string where = "architecture line " + std::to_string(lineno);
        const std::string& kw = tok[0];

        if (kw == "name") {
            if (tok.size() != 2) throw ConfigError(where + ": 'name' takes one identifier");
            spec.name = tok[1];
            continue;
        }
        if (kw == "input") {
            if (tok.size() != 4) throw ConfigError(where + ": 'input' takes C H W");
            spec.input_shape = {parse_size(tok[1], where), parse_size(tok[2], where), parse_size(tok[3], where)};
            have_input = true;
            continue;
        }

        LayerDesc d;
        if (kw == "conv") {
            d.kind = LayerKind::conv;
            d.kernel = 3;
        } else if (kw == "pool") {
            d.kind = LayerKind::pool;
        } else if (kw == "fc") {
            d.kind = LayerKind::fc;
        } else {
            throw ConfigError(where + ": unknown layer type '" + kw + "'");
        }
        if (tok.size() < 2) throw ConfigError(where + ": missing size for '" + kw + "'");
        const std::size_t first = parse_size(tok[1], where);
        if (d.kind == LayerKind::pool) {
            d.kernel = first;
            d.stride = first;
        } else {
            d.units = first;
        }
        if (first == 0) throw ConfigError(where + ": " + kw + " size must be positive");

        for (std::size_t t = 2; t < tok.size(); ++t) {
            const auto eq = tok[t].find('=');
            if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + tok[t] + "'");
            const std::string key = tok[t].substr(0, eq);
            const std::string val = tok[t].substr(eq + 1);
            if (key == "kernel" && d.kind == LayerKind::conv) {
                d.kernel = parse_size(val, where);
            } else if (key == "stride" && d.kind != LayerKind::fc) {
                d.stride = parse_size(val, where);
            } else if (key == "pad" && d.kind == LayerKind::conv) {
                d.padding = parse_size(val, where);
            } else if (key == "act" && d.kind != LayerKind::pool) {
                if (val == "relu") d.activation = Activation::relu;
                else if (val == "none") d.activation = Activation::none;
                else throw ConfigError(where + ": unknown activation '" + val + "'");
            } else if (key == "hash" && d.kind != LayerKind::pool) {
                try {
                    d.hash_rate = CompressionRate::parse(val);
                } catch (const ConfigError& e) {
                    throw ConfigError(where + ": " + e.what());
                }
            } else {
                throw ConfigError(where + ": option '" + key + "' not valid for " + kw);
            }
        }
        spec.layers.push_back(d);
    }
    if (!have_input) throw ConfigError("architecture: missing 'input' line");
    if (spec.name.empty()) spec.name = "custom";
    spec.validate();
    return spec;
}

namespace {

const std::map<std::string, std::string>& preset_texts() {
    // Only the layer counts are fixed; widths and kernels are chosen here.
    static const std::map<std::string, std::string> presets = {
        {"mnist-ref",
         "name mnist-ref\n"
         "input 1 28 28\n"
         "conv 64 kernel=5 act=relu\n"
         "pool 2\n"
         "conv 128 kernel=5 act=relu\n"
         "pool 2\n"
         "fc 512 act=relu\n"
         "fc 10\n"},
        {"dnn1",
         "name dnn1\n"
         "input 3 32 32\n"
         "conv 32 kernel=3 pad=1 act=relu\n"
         "conv 32 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "fc 256 act=relu\n"
         "fc 10\n"},
        {"dnn2",
         "name dnn2\n"
         "input 3 32 32\n"
         "conv 32 kernel=3 pad=1 act=relu\n"
         "conv 32 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "fc 256 act=relu\n"
         "fc 10\n"},
        {"dnn3",
         "name dnn3\n"
         "input 3 32 32\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 256 kernel=3 pad=1 act=relu\n"
         "conv 256 kernel=3 pad=1 act=relu\n"
         "conv 256 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "fc 512 act=relu\n"
         "fc 10\n"},
        {"vgg16",
         "name vgg16\n"
         "input 3 32 32\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "conv 64 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "conv 128 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 256 kernel=3 pad=1 act=relu\n"
         "conv 256 kernel=3 pad=1 act=relu\n"
         "conv 256 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 512 kernel=3 pad=1 act=relu\n"
         "conv 512 kernel=3 pad=1 act=relu\n"
         "conv 512 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "conv 512 kernel=3 pad=1 act=relu\n"
         "conv 512 kernel=3 pad=1 act=relu\n"
         "conv 512 kernel=3 pad=1 act=relu\n"
         "pool 2\n"
         "fc 512 act=relu\n"
         "fc 512 act=relu\n"
         "fc 10\n"},
    };
    return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : preset_texts()) names.push_back(k);
    return names;
}

ArchitectureSpec preset_architecture(const std::string& name) {
    const auto& p = preset_texts();
    auto it = p.find(name);
    if (it == p.end()) throw ConfigError("unknown architecture preset '" + name + "'");
    return parse_architecture(it->second);
}

ArchitectureSpec load_architecture(const std::string& preset_or_path) {
    if (preset_texts().count(preset_or_path)) return preset_architecture(preset_or_path);
    std::ifstream f(preset_or_path);
    if (!f) throw ConfigError("'" + preset_or_path + "' is neither a preset nor a readable architecture file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_architecture(ss.str());
}

ArchitectureSpec with_hash_rate(ArchitectureSpec spec, CompressionRate rate, bool include_conv) {
    for (auto& d : spec.layers)
        if (d.kind == LayerKind::fc || (include_conv && d.kind == LayerKind::conv)) d.hash_rate = rate;
    return spec;
}

}  // namespace advhash
