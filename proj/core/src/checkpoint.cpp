#include "advhash/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <optional>

#include "advhash/dataset.hpp"
#include "advhash/error.hpp"
#include "advhash/io.hpp"

namespace advhash {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'H', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kDense = 0;
constexpr std::uint8_t kHashed = 1;

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void f64s(std::span<const double> v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void shape(const Shape& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        for (auto d : s) u64(d);
    }
    std::vector<std::uint8_t>& buffer() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> b, std::string section) : b_(b), section_(std::move(section)) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        const auto p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (n > b_.size() - pos_) fail("truncated");
        const auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::vector<double> f64s() {
        const std::uint64_t n = u64();
        if (n > (b_.size() - pos_) / 8) fail("value count " + std::to_string(n) + " exceeds the section");
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    Shape shape() {
        const std::uint32_t rank = u32();
        if (rank == 0 || rank > 8) fail("bad rank " + std::to_string(rank));
        Shape s(rank);
        for (auto& d : s) {
            d = u64();
            if (d == 0) fail("zero dimension");
        }
        return s;
    }
    bool done() const { return pos_ == b_.size(); }
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(section_, what); }

private:
    std::span<const std::uint8_t> b_;
    std::string section_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> data) {
    uLong c = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large payloads in pieces.
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
        c = crc32(c, data.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(c);
}

void put_section(Writer& out, const char (&tag)[5], const std::vector<std::uint8_t>& payload) {
    out.bytes(std::string_view(tag, 4));
    out.u64(payload.size());
    out.buffer().insert(out.buffer().end(), payload.begin(), payload.end());
    out.u32(crc_of(payload));
}

std::string layer_section(std::size_t l) { return "LAYR " + std::to_string(l); }

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network& network, const std::string& note) {
    if (!network.initialized()) throw StateError("checkpoint: network parameters are not initialized");
    Writer out;
    out.bytes(std::string_view(kMagic, 8));
    out.u32(kCheckpointVersion);

    {
        Writer s;
        s.bytes(network.architecture().to_text());
        put_section(out, "ARCH", s.buffer());
    }
    {
        Writer s;
        s.u64(network.seed());
        s.u32(static_cast<std::uint32_t>(note.size()));
        s.bytes(note);
        put_section(out, "META", s.buffer());
    }
    for (std::size_t l = 0; l < network.layer_count(); ++l) {
        const ParamLayer* p = network.params(l);
        if (!p) continue;
        Writer s;
        s.u32(static_cast<std::uint32_t>(l));
        if (const auto* h = p->hashed_params()) {
            s.u8(kHashed);
            s.u64(h->layer_seed);
            s.u64(h->sign_seed);
            s.u64(h->rate.num);
            s.u64(h->rate.den);
            s.shape(h->virtual_shape);
            s.f64s(h->real_weights);
        } else {
            s.u8(kDense);
            s.shape(p->effective().weights.shape());
            s.f64s(p->effective().weights.data());
        }
        s.f64s(p->bias().data());
        put_section(out, "LAYR", s.buffer());
    }
    put_section(out, "END\0", {});
    return std::move(out.buffer());
}

Network deserialize_checkpoint(std::span<const std::uint8_t> bytes, CheckpointInfo* info) {
    Reader top(bytes, "header");
    const auto magic = top.take(8);
    if (std::memcmp(magic.data(), kMagic, 8) != 0) top.fail("not a checkpoint (bad magic)");
    const std::uint32_t version = top.u32();
    if (version != kCheckpointVersion)
        top.fail("unsupported version " + std::to_string(version) + " (this build reads " +
                 std::to_string(kCheckpointVersion) + ")");

    std::optional<Network> net;
    CheckpointInfo meta;
    meta.version = version;
    bool have_meta = false;
    std::vector<char> seen;
    for (;;) {
        const auto tag_bytes = top.take(4);
        const std::string tag(reinterpret_cast<const char*>(tag_bytes.data()), 4);
        const std::string name = tag == std::string("END\0", 4) ? "END" : tag;
        std::span<const std::uint8_t> payload;
        std::uint32_t crc = 0;
        try {
            const std::uint64_t len = top.u64();
            payload = top.take(static_cast<std::size_t>(len));
            crc = top.u32();
        } catch (const FormatError&) {
            throw FormatError(name, "truncated section");
        }
        if (crc != crc_of(payload)) throw FormatError(name, "CRC mismatch (corrupted section)");

        if (name == "END") {
            if (!payload.empty()) throw FormatError("END", "non-empty terminator");
            break;
        }
        if (name == "ARCH") {
            if (net) throw FormatError("ARCH", "duplicate section");
            try {
                net.emplace(parse_architecture(std::string(payload.begin(), payload.end())));
            } catch (const ConfigError& e) {
                throw FormatError("ARCH", e.what());
            }
            seen.assign(net->layer_count(), 0);
            continue;
        }
        if (!net) throw FormatError(name, "appears before the ARCH section");
        if (name == "META") {
            Reader r(payload, "META");
            meta.seed = r.u64();
            const std::uint32_t n = r.u32();
            const auto s = r.take(n);
            meta.note.assign(s.begin(), s.end());
            if (!r.done()) r.fail("trailing bytes");
            net->set_seed(meta.seed);
            have_meta = true;
            continue;
        }
        if (name != "LAYR") throw FormatError(name, "unknown section tag");

        Reader r(payload, "LAYR");
        const std::uint32_t l = r.u32();
        const std::string sec = layer_section(l);
        Reader body(payload.subspan(4), sec);
        if (l >= net->layer_count() || !net->architecture().layers[l].has_params())
            body.fail("no parameter layer with this index");
        if (seen[l]) body.fail("duplicate section");
        seen[l] = 1;
        const std::uint8_t kind = body.u8();
        try {
            if (kind == kHashed) {
                HashedParams hp;
                hp.layer_seed = body.u64();
                hp.sign_seed = body.u64();
                hp.rate.num = body.u64();
                hp.rate.den = body.u64();
                if (hp.rate.num == 0 || hp.rate.num > hp.rate.den) body.fail("invalid compression rate");
                hp.virtual_shape = body.shape();
                hp.real_weights = body.f64s();
                auto bias = body.f64s();
                if (!body.done()) body.fail("trailing bytes");
                hp.validate(sec);
                const std::size_t rows = hp.virtual_shape[0];
                if (bias.size() != rows) body.fail("bias length " + std::to_string(bias.size()) + " != " + std::to_string(rows));
                net->set_params(l, ParamLayer::hashed(std::move(hp), Tensor({rows}, std::move(bias))));
            } else if (kind == kDense) {
                const Shape ws = body.shape();
                auto w = body.f64s();
                auto bias = body.f64s();
                if (!body.done()) body.fail("trailing bytes");
                if (w.size() != shape_size(ws)) body.fail("weight count does not match its shape");
                if (bias.size() != ws[0]) body.fail("bias length does not match the weight rows");
                net->set_params(l, ParamLayer::dense(Tensor(ws, std::move(w)), Tensor({ws[0]}, std::move(bias))));
            } else {
                body.fail("unknown storage kind " + std::to_string(kind));
            }
        } catch (const FormatError&) {
            throw;
        } catch (const Error& e) {
            throw FormatError(sec, e.what());
        }
    }
    if (!top.done()) throw FormatError("END", "trailing bytes after the terminator");
    if (!net) throw FormatError("ARCH", "missing");
    if (!have_meta) throw FormatError("META", "missing");
    for (std::size_t l = 0; l < seen.size(); ++l)
        if (net->architecture().layers[l].has_params() && !seen[l]) throw FormatError(layer_section(l), "missing");
    if (info) *info = meta;
    return std::move(*net);
}

void save_checkpoint(const Network& network, const std::string& path, const std::string& note) {
    const auto bytes = serialize_checkpoint(network, note);
    atomic_write(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Network load_checkpoint(const std::string& path, CheckpointInfo* info) {
    const auto bytes = read_file_bytes(path);
    return deserialize_checkpoint(bytes, info);
}

}  // namespace advhash
