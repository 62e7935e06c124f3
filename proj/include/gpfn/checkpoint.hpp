// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "gpfn/dataset.hpp"
#include "gpfn/predictor.hpp"
#include "gpfn/sample_set.hpp"
#include "gpfn/trainer.hpp"

namespace gpfn {

namespace io {

/// Little-endian byte writer.
class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    void raw(const std::vector<std::uint8_t>& b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Little-endian byte reader that throws TruncatedFile on overrun.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string what)
        : data_(data), size_(size), what_(std::move(what)) {}

    std::uint8_t u8() { return need(1)[0]; }
    std::uint32_t u32() {
        const auto* p = need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* p = need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string_view raw(std::size_t n) {
        const auto* p = need(n);
        return {reinterpret_cast<const char*>(p), n};
    }
    std::size_t remaining() const noexcept { return size_ - pos_; }
    std::size_t position() const noexcept { return pos_; }

private:
    const std::uint8_t* need(std::size_t n) {
        if (size_ - pos_ < n) throw TruncatedFile(what_ + ": unexpected end of data");
        const auto* p = data_ + pos_;
        pos_ += n;
        return p;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string what_;
};

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        crc = ::crc32(crc, data, chunk);
        data += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

/// 64-bit FNV-1a, used to fingerprint configurations.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace io

/// Persisted training state.
///
/// Layout (little-endian): "GPFN", u32 version, u64 payload length, payload,
/// u32 CRC-32 of the payload. Payload: u8 regime, u32 T, f64 shift, f64 sigma1,
/// u32 embed width, u32 #widths, u32 widths[], u32 image height, u32 image
/// width (0 when not images), u64 training steps, u64 seed, u64 config hash,
/// u64 #params, f32 params[], f32 ema[].
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::string_view kMagic = "GPFN";

    Regime regime = Regime::Gpfn;
    std::uint32_t steps = 1000;
    double shift = kDefaultShift;
    double sigma1 = kDefaultSigma1;
    std::uint32_t embed_dim = 0;
    std::vector<int> widths;
    std::optional<ImageShape> image;
    std::uint64_t train_steps = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    VectorT<float> params;
    VectorT<float> ema;

    Mlp<float> net() const { return restore(params); }
    Mlp<float> ema_net() const { return restore(ema); }

    friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
        auto same_bits = [](const VectorT<float>& x, const VectorT<float>& y) {
            return x.size() == y.size() &&
                   std::memcmp(x.data(), y.data(), static_cast<std::size_t>(x.size()) * sizeof(float)) == 0;
        };
        return a.regime == b.regime && a.steps == b.steps && std::bit_cast<std::uint64_t>(a.shift) ==
               std::bit_cast<std::uint64_t>(b.shift) && std::bit_cast<std::uint64_t>(a.sigma1) ==
               std::bit_cast<std::uint64_t>(b.sigma1) && a.embed_dim == b.embed_dim && a.widths == b.widths &&
               a.image == b.image && a.train_steps == b.train_steps && a.seed == b.seed &&
               a.config_hash == b.config_hash && same_bits(a.params, b.params) && same_bits(a.ema, b.ema);
    }

private:
    Mlp<float> restore(const VectorT<float>& p) const {
        Mlp<float> net(widths, static_cast<int>(embed_dim));
        if (net.parameter_count() != p.size()) {
            throw InconsistentLayout("checkpoint: parameter count does not match layer widths");
        }
        net.parameters() = p;
        return net;
    }
};

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    detail::require(c.params.size() == c.ema.size(), "encode_checkpoint: params/ema size mismatch");
    io::ByteWriter payload;
    payload.u8(c.regime == Regime::Gpfn ? 0 : 1);
    payload.u32(c.steps);
    payload.f64(c.shift);
    payload.f64(c.sigma1);
    payload.u32(c.embed_dim);
    payload.u32(static_cast<std::uint32_t>(c.widths.size()));
    for (int w : c.widths) payload.u32(static_cast<std::uint32_t>(w));
    payload.u32(c.image ? static_cast<std::uint32_t>(c.image->height) : 0);
    payload.u32(c.image ? static_cast<std::uint32_t>(c.image->width) : 0);
    payload.u64(c.train_steps);
    payload.u64(c.seed);
    payload.u64(c.config_hash);
    payload.u64(static_cast<std::uint64_t>(c.params.size()));
    for (Eigen::Index i = 0; i < c.params.size(); ++i) payload.f32(c.params[i]);
    for (Eigen::Index i = 0; i < c.ema.size(); ++i) payload.f32(c.ema[i]);

    io::ByteWriter out;
    out.raw(Checkpoint::kMagic);
    out.u32(Checkpoint::kVersion);
    out.u64(payload.bytes().size());
    out.raw(payload.bytes());
    out.u32(io::crc32(payload.bytes().data(), payload.bytes().size()));
    return out.take();
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader header(bytes.data(), bytes.size(), "checkpoint");
    if (header.raw(4) != Checkpoint::kMagic) throw BadMagic("checkpoint: bad magic");
    const std::uint32_t version = header.u32();
    if (version != Checkpoint::kVersion) {
        throw UnknownVersion("checkpoint: unknown format version " + std::to_string(version));
    }
    const std::uint64_t length = header.u64();
    if (header.remaining() < length || header.remaining() - length < 4) {
        throw TruncatedFile("checkpoint: truncated payload");
    }
    const std::uint8_t* payload_data = bytes.data() + header.position();
    io::ByteReader trailer(payload_data + length, 4, "checkpoint");
    if (trailer.u32() != io::crc32(payload_data, static_cast<std::size_t>(length))) {
        throw ChecksumMismatch("checkpoint: payload checksum mismatch");
    }

    io::ByteReader r(payload_data, static_cast<std::size_t>(length), "checkpoint");
    Checkpoint c;
    const std::uint8_t regime = r.u8();
    if (regime > 1) throw InconsistentLayout("checkpoint: unknown regime tag");
    c.regime = regime == 0 ? Regime::Gpfn : Regime::BfnBaseline;
    c.steps = r.u32();
    c.shift = r.f64();
    c.sigma1 = r.f64();
    c.embed_dim = r.u32();
    const std::uint32_t n_widths = r.u32();
    if (n_widths < 2 || n_widths > 64) throw InconsistentLayout("checkpoint: implausible layer count");
    std::uint64_t expected = 0;
    for (std::uint32_t i = 0; i < n_widths; ++i) {
        const std::uint32_t w = r.u32();
        if (w == 0 || w > (1u << 20)) throw InconsistentLayout("checkpoint: implausible layer width");
        c.widths.push_back(static_cast<int>(w));
    }
    for (std::size_t l = 0; l + 1 < c.widths.size(); ++l) {
        expected += static_cast<std::uint64_t>(c.widths[l + 1]) * (static_cast<std::uint64_t>(c.widths[l]) + 1);
    }
    const std::uint32_t h = r.u32(), w = r.u32();
    if (h > 0 && w > 0) c.image = ImageShape{static_cast<int>(h), static_cast<int>(w)};
    c.train_steps = r.u64();
    c.seed = r.u64();
    c.config_hash = r.u64();
    const std::uint64_t n_params = r.u64();
    if (n_params != expected) throw InconsistentLayout("checkpoint: parameter count does not match layer widths");
    if (r.remaining() != 2 * 4 * n_params) throw InconsistentLayout("checkpoint: payload size does not match");
    c.params.resize(static_cast<Eigen::Index>(n_params));
    c.ema.resize(static_cast<Eigen::Index>(n_params));
    for (Eigen::Index i = 0; i < c.params.size(); ++i) c.params[i] = r.f32();
    for (Eigen::Index i = 0; i < c.ema.size(); ++i) c.ema[i] = r.f32();
    return c;
}

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    io::write_file_atomic(path, encode_checkpoint(c));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_bytes(path)); }

// --------------------------------------------------------------------------
// Sample files
// --------------------------------------------------------------------------

/// Generated samples with provenance.
///
/// Layout (little-endian): "GPFS", u32 version, u64 n, u64 d, u32 image height,
/// u32 image width, u64 seed, u64 config hash, f32 data[n * d] row-major,
/// u32 CRC-32 of everything after the magic.
struct SampleFile {
    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::string_view kMagic = "GPFS";

    SampleSet samples;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

inline std::vector<std::uint8_t> encode_samples(const SampleFile& f) {
    io::ByteWriter body;
    body.u32(SampleFile::kVersion);
    body.u64(static_cast<std::uint64_t>(f.samples.size()));
    body.u64(static_cast<std::uint64_t>(f.samples.dim()));
    body.u32(f.samples.image ? static_cast<std::uint32_t>(f.samples.image->height) : 0);
    body.u32(f.samples.image ? static_cast<std::uint32_t>(f.samples.image->width) : 0);
    body.u64(f.seed);
    body.u64(f.config_hash);
    for (Eigen::Index i = 0; i < f.samples.size(); ++i)
        for (Eigen::Index j = 0; j < f.samples.dim(); ++j) body.f32(static_cast<float>(f.samples.data(i, j)));
    io::ByteWriter out;
    out.raw(SampleFile::kMagic);
    out.raw(body.bytes());
    out.u32(io::crc32(body.bytes().data(), body.bytes().size()));
    return out.take();
}

inline SampleFile decode_samples(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw TruncatedFile("samples: file too short");
    if (std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != SampleFile::kMagic) {
        throw BadMagic("samples: bad magic");
    }
    const std::size_t body_size = bytes.size() - 8;
    io::ByteReader trailer(bytes.data() + 4 + body_size, 4, "samples");
    io::ByteReader r(bytes.data() + 4, body_size, "samples");
    const std::uint32_t version = r.u32();
    if (version != SampleFile::kVersion) throw UnknownVersion("samples: unknown format version");
    if (trailer.u32() != io::crc32(bytes.data() + 4, body_size)) throw ChecksumMismatch("samples: checksum mismatch");
    SampleFile f;
    const std::uint64_t n = r.u64(), d = r.u64();
    const std::uint32_t h = r.u32(), w = r.u32();
    f.seed = r.u64();
    f.config_hash = r.u64();
    if (d == 0 || n > (std::uint64_t{1} << 32) || d > (std::uint64_t{1} << 24) || r.remaining() != 4 * n * d) {
        throw InconsistentLayout("samples: payload size does not match n x d");
    }
    if (h > 0 && w > 0) f.samples.image = ImageShape{static_cast<int>(h), static_cast<int>(w)};
    f.samples.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < f.samples.data.rows(); ++i)
        for (Eigen::Index j = 0; j < f.samples.data.cols(); ++j) f.samples.data(i, j) = r.f32();
    return f;
}

inline void write_samples(const std::filesystem::path& path, const SampleFile& f) {
    io::write_file_atomic(path, encode_samples(f));
}

inline SampleFile read_samples(const std::filesystem::path& path) { return decode_samples(io::read_bytes(path)); }

// --------------------------------------------------------------------------
// Image grids
// --------------------------------------------------------------------------

inline std::uint8_t to_gray(double v) {
    const double clamped = std::min(1.0, std::max(-1.0, v));
    return static_cast<std::uint8_t>(std::lround((clamped + 1.0) * 127.5));
}

/// Binary PGM (P5) tiling the first rows*cols images row by row, no padding.
inline std::vector<std::uint8_t> render_sample_grid(const SampleSet& samples, int rows, int cols) {
    if (!samples.image) throw InvalidArgument("render_sample_grid: samples are not image-shaped");
    detail::require(rows >= 1 && cols >= 1, "render_sample_grid: grid must be at least 1x1");
    detail::require(static_cast<Eigen::Index>(rows) * cols <= samples.size(),
                    "render_sample_grid: not enough samples for the grid");
    const ImageShape s = *samples.image;
    const int width = cols * s.width, height = rows * s.height;
    io::ByteWriter out;
    out.raw("P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n");
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int idx = (y / s.height) * cols + x / s.width;
            const int pixel = (y % s.height) * s.width + x % s.width;
            out.u8(to_gray(samples.data(idx, pixel)));
        }
    }
    return out.take();
}

inline void write_sample_grid(const SampleSet& samples, const std::filesystem::path& path, int rows, int cols) {
    io::write_file_atomic(path, render_sample_grid(samples, rows, cols));
}

}  // namespace gpfn
