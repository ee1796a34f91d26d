#pragma once

// Bit-exact file formats. Everything multi-byte is little-endian regardless
// of host order.
//
// TensorFile: "CMPC" | version u32 | dtype u8 (0=f32, 1=f64) | ndim u32 |
//             dims u64[ndim] | payload row-major.
// Checkpoint: "CMPK" | version u32 | config digest u64 | count u32 |
//             count x (name_len u32 | name bytes | TensorFile body).
// Mask PGM:   "P5\n<W> <H>\n255\n" + H*W bytes, foreground 255.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmpc/params.hpp"
#include "cmpc/tensor.hpp"

namespace cmpc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

inline constexpr std::uint32_t kTensorFileVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

inline void put_u32le(std::ostream& os, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    put_bytes(os, b, 4);
}

inline void put_u64le(std::ostream& os, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    put_bytes(os, b, 8);
}

inline bool get_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is.gcount()) == n;
}

inline std::uint32_t get_u32le(std::istream& is, const char* what) {
    std::uint8_t b[4];
    if (!get_bytes(is, b, 4)) throw IoError(std::string("truncated header: ") + what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline std::uint64_t get_u64le(std::istream& is, const char* what) {
    std::uint8_t b[8];
    if (!get_bytes(is, b, 8)) throw IoError(std::string("truncated header: ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f32le(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(os, bits);
}

inline void put_f64le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64le(os, bits);
}

template <class T>
void write_tensor_body(std::ostream& os, const Tensor<T>& t, Dtype dt) {
    put_bytes(os, "CMPC", 4);
    put_u32le(os, kTensorFileVersion);
    put_u8(os, static_cast<std::uint8_t>(dt));
    put_u32le(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u64le(os, static_cast<std::uint64_t>(d));
    if (dt == Dtype::F32)
        for (std::int64_t i = 0; i < t.size(); ++i) put_f32le(os, static_cast<float>(t[i]));
    else
        for (std::int64_t i = 0; i < t.size(); ++i) put_f64le(os, static_cast<double>(t[i]));
}

template <class T>
Tensor<T> read_tensor_body(std::istream& is, Dtype* dtype_out = nullptr) {
    char magic[4];
    if (!get_bytes(is, magic, 4) || std::memcmp(magic, "CMPC", 4) != 0)
        throw IoError("bad magic: not a CMPC tensor file");
    const auto version = get_u32le(is, "version");
    if (version != kTensorFileVersion)
        throw IoError("unsupported version " + std::to_string(version) + " (want " +
                      std::to_string(kTensorFileVersion) + ")");
    std::uint8_t dt_raw;
    if (!get_bytes(is, &dt_raw, 1)) throw IoError("truncated header: dtype");
    if (dt_raw > 1) throw IoError("unknown dtype code " + std::to_string(dt_raw));
    const Dtype dt = static_cast<Dtype>(dt_raw);
    if (dtype_out) *dtype_out = dt;
    const auto ndim = get_u32le(is, "ndim");
    if (ndim > 8) throw IoError("implausible ndim " + std::to_string(ndim));
    Shape shape;
    for (std::uint32_t i = 0; i < ndim; ++i) shape.push_back(static_cast<std::int64_t>(get_u64le(is, "dims")));
    Tensor<T> t(shape);
    if (dt == Dtype::F32) {
        for (std::int64_t i = 0; i < t.size(); ++i) {
            std::uint8_t b[4];
            if (!get_bytes(is, b, 4)) throw IoError("truncated payload");
            std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
                                 static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
            float f;
            std::memcpy(&f, &bits, 4);
            t[i] = static_cast<T>(f);
        }
    } else {
        for (std::int64_t i = 0; i < t.size(); ++i) {
            std::uint8_t b[8];
            if (!get_bytes(is, b, 8)) throw IoError("truncated payload");
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
            double f;
            std::memcpy(&f, &bits, 8);
            t[i] = static_cast<T>(f);
        }
    }
    return t;
}

}  // namespace detail

template <class T>
void write_tensor(const std::string& path, const Tensor<T>& t, Dtype dt = Dtype::F64) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    detail::write_tensor_body(f, t, dt);
    if (!f) throw IoError("write failed on '" + path + "'");
}

template <class T>
Tensor<T> read_tensor(const std::string& path, Dtype* dtype_out = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    auto t = detail::read_tensor_body<T>(f, dtype_out);
    return t;
}

// ---------------------------------------------------------------------------
// checkpoints

template <class T>
void save_checkpoint(const std::string& path, const ParamStore<T>& params, std::uint64_t config_digest,
                     Dtype dt = Dtype::F64) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    detail::put_bytes(f, "CMPK", 4);
    detail::put_u32le(f, kCheckpointVersion);
    detail::put_u64le(f, config_digest);
    detail::put_u32le(f, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, tensor] : params.tensors()) {
        detail::put_u32le(f, static_cast<std::uint32_t>(name.size()));
        detail::put_bytes(f, name.data(), name.size());
        detail::write_tensor_body(f, tensor, dt);
    }
    if (!f) throw IoError("write failed on '" + path + "'");
}

/// Loads into a store whose inventory came from the target Config; a
/// mismatched Config is rejected through name/shape comparison.
template <class T>
void load_checkpoint(const std::string& path, ParamStore<T>& params, std::uint64_t expected_digest,
                     bool* digest_matched = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    char magic[4];
    if (!detail::get_bytes(f, magic, 4) || std::memcmp(magic, "CMPK", 4) != 0)
        throw IoError("bad magic: not a CMPC checkpoint");
    const auto version = detail::get_u32le(f, "version");
    if (version != kCheckpointVersion)
        throw IoError("unsupported version " + std::to_string(version) + " (want " +
                      std::to_string(kCheckpointVersion) + ")");
    const auto digest = detail::get_u64le(f, "digest");
    if (digest_matched) *digest_matched = digest == expected_digest;
    const auto count = detail::get_u32le(f, "count");
    if (count != params.size())
        throw IoError("checkpoint holds " + std::to_string(count) + " tensors, config wants " +
                      std::to_string(params.size()));
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::get_u32le(f, "name length");
        std::string name(name_len, '\0');
        if (!detail::get_bytes(f, name.data(), name_len)) throw IoError("truncated header: name");
        auto t = detail::read_tensor_body<T>(f);
        if (!params.has(name)) throw IoError("checkpoint parameter '" + name + "' not in config inventory");
        if (!seen.insert(name).second) throw IoError("checkpoint parameter '" + name + "' appears twice");
        Tensor<T>& dst = params.mutable_at(name);
        if (dst.shape != t.shape)
            throw IoError("checkpoint parameter '" + name + "' has shape " + shape_str(t.shape) +
                          ", config wants " + shape_str(dst.shape));
        dst = std::move(t);
    }
}

// ---------------------------------------------------------------------------
// masks

template <class T>
void write_mask_pgm(const std::string& path, const Tensor<T>& mask) {
    if (mask.rank() != 2) throw IoError("write_mask_pgm: mask must be rank 2, got " + shape_str(mask.shape));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "P5\n" << mask.shape[1] << " " << mask.shape[0] << "\n255\n";
    for (std::int64_t i = 0; i < mask.size(); ++i) {
        if (mask[i] != T(0) && mask[i] != T(1))
            throw IoError("write_mask_pgm: mask values must be 0 or 1");
        const char byte = mask[i] == T(1) ? static_cast<char>(0xFF) : static_cast<char>(0x00);
        f.write(&byte, 1);
    }
    if (!f) throw IoError("write failed on '" + path + "'");
}

template <class T>
Tensor<T> read_mask_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string magic;
    f >> magic;
    if (magic != "P5") throw IoError("bad magic: '" + path + "' is not a P5 PGM");
    std::int64_t w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (!f || w < 1 || h < 1 || maxval < 1 || maxval > 255) throw IoError("bad PGM header in '" + path + "'");
    f.ignore(1);  // single whitespace after maxval
    Tensor<T> mask(Shape{h, w});
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (std::int64_t i = 0; i < h; ++i) {
        if (!detail::get_bytes(f, row.data(), row.size())) throw IoError("truncated payload in '" + path + "'");
        for (std::int64_t j = 0; j < w; ++j) mask.at2(i, j) = row[static_cast<std::size_t>(j)] ? T(1) : T(0);
    }
    return mask;
}

// ---------------------------------------------------------------------------
// vocabulary / token text

inline std::vector<std::string> load_vocab(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open vocabulary '" + path + "'");
    std::vector<std::string> vocab;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        vocab.push_back(line);
    }
    return vocab;
}

/// Whitespace-split tokens; with a vocabulary each word maps to its line
/// index, otherwise entries must already be integer ids.
inline std::vector<std::int64_t> tokens_from_text(const std::string& text, const std::vector<std::string>* vocab) {
    std::istringstream is(text);
    std::vector<std::int64_t> ids;
    std::string tok;
    while (is >> tok) {
        if (vocab) {
            auto it = std::find(vocab->begin(), vocab->end(), tok);
            if (it == vocab->end()) throw IoError("token '" + tok + "' not in vocabulary");
            ids.push_back(static_cast<std::int64_t>(it - vocab->begin()));
        } else {
            try {
                std::size_t pos = 0;
                ids.push_back(std::stoll(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument("");
            } catch (...) {
                throw IoError("token '" + tok + "' is not an integer id and no vocabulary was given");
            }
        }
    }
    return ids;
}

}  // namespace cmpc
