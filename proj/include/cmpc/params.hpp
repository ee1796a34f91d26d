#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "cmpc/tensor.hpp"

namespace cmpc {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform in [0,1) from the top 53 bits; avoids std::uniform_real_distribution,
/// whose output is not pinned down by the standard.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::mt19937_64 named_rng(std::uint64_t seed, std::string_view name) {
    return std::mt19937_64(splitmix64(seed) ^ fnv1a64(name));
}

/// Uniform in +-sqrt(6/(fan_in+fan_out)). For matrices the fan sum is rows+cols;
/// for KhxKwxCixCo kernels it is Kh*Kw*(Ci+Co).
template <class T>
Tensor<T> xavier_uniform(Shape shape, std::uint64_t seed, std::string_view name) {
    std::int64_t fan_sum = 0;
    if (shape.size() == 2) {
        fan_sum = shape[0] + shape[1];
    } else if (shape.size() == 4) {
        fan_sum = shape[0] * shape[1] * (shape[2] + shape[3]);
    } else {
        throw std::invalid_argument("xavier_uniform: want rank 2 or 4, got " + shape_str(shape));
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_sum));
    auto rng = named_rng(seed, name);
    Tensor<T> t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<T>(bound * (2.0 * unit_uniform(rng) - 1.0));
    return t;
}

/// Named learnable tensors. Iteration order is lexicographic, which every
/// consumer (checkpointing, Adam, gradient maps) relies on for determinism.
template <class T>
class ParamStore {
   public:
    std::uint64_t seed = 0;

    void add(std::string name, Tensor<T> t) {
        auto [it, inserted] = tensors_.emplace(std::move(name), std::move(t));
        if (!inserted) throw std::invalid_argument("ParamStore: duplicate parameter '" + it->first + "'");
    }

    bool has(const std::string& name) const { return tensors_.count(name) != 0; }

    const Tensor<T>& at(const std::string& name) const {
        auto it = tensors_.find(name);
        if (it == tensors_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
        return it->second;
    }

    Tensor<T>& mutable_at(const std::string& name) {
        auto it = tensors_.find(name);
        if (it == tensors_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
        return it->second;
    }

    std::int64_t count_with_prefix(const std::string& prefix) const {
        std::int64_t n = 0;
        for (auto it = tensors_.lower_bound(prefix); it != tensors_.end(); ++it) {
            if (it->first.compare(0, prefix.size(), prefix) != 0) break;
            ++n;
        }
        return n;
    }

    std::size_t size() const { return tensors_.size(); }
    std::int64_t scalar_count() const {
        std::int64_t n = 0;
        for (const auto& [k, v] : tensors_) n += v.size();
        return n;
    }
    const std::map<std::string, Tensor<T>>& tensors() const { return tensors_; }
    std::map<std::string, Tensor<T>>& tensors() { return tensors_; }

   private:
    std::map<std::string, Tensor<T>> tensors_;
};

}  // namespace cmpc
