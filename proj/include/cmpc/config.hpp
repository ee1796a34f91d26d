#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cmpc/params.hpp"

namespace cmpc {

enum class Mode { Image, Video };
enum class AarAdjacency { DR, AR };  // direct feature relevance vs action-word routing

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Channel widths, structural knobs and switches for one pipeline instance.
/// Zero for C_n/d/d_a/d_p means "use the derived default" (C_l/2 and C_m).
struct Config {
    std::int64_t C_v = 1000;
    std::int64_t C_l = 1000;
    std::int64_t C_m = 1000;
    std::int64_t C_n = 0;
    std::int64_t d = 0;
    std::int64_t d_a = 0;
    std::int64_t d_p = 0;
    std::int64_t C_hp = 500;  // ConvLSTM cell width
    std::int64_t r = 5;       // bilinear fusion rank
    std::int64_t n = 3;       // feature exchange rounds
    std::int64_t g = 1;       // graph convolution layers; 0 disables RAR
    std::int64_t K = 5;       // clip length (video)
    std::int64_t vocab = 1000;
    Mode mode = Mode::Image;
    bool cmf = true;
    AarAdjacency aar_adjacency = AarAdjacency::DR;
    std::uint64_t seed = 0;
    bool aar = true;                      // video: AAR stage on/off (ablation)
    bool s_includes_action = true;        // video: count action words into s
    bool decoupled_weight_decay = true;
    bool convlstm_deep_to_shallow = true;

    std::int64_t cn() const { return C_n > 0 ? C_n : std::max<std::int64_t>(1, C_l / 2); }
    std::int64_t dd() const { return d > 0 ? d : C_m; }
    std::int64_t dda() const { return d_a > 0 ? d_a : C_m; }
    std::int64_t ddp() const { return d_p > 0 ? d_p : C_m; }
    int word_types() const { return mode == Mode::Video ? 5 : 4; }

    void validate() const {
        auto positive = [](const char* key, std::int64_t v) {
            if (v < 1) throw ConfigError(std::string("config key '") + key + "': must be >= 1, got " + std::to_string(v));
        };
        positive("C_v", C_v);
        positive("C_l", C_l);
        positive("C_m", C_m);
        positive("C_hp", C_hp);
        positive("r", r);
        positive("K", K);
        if (n < 0) throw ConfigError("config key 'n': must be >= 0, got " + std::to_string(n));
        if (g < 0) throw ConfigError("config key 'g': must be >= 0, got " + std::to_string(g));
        if (vocab < 2) throw ConfigError("config key 'vocab': must be >= 2, got " + std::to_string(vocab));
        auto nonneg = [](const char* key, std::int64_t v) {
            if (v < 0) throw ConfigError(std::string("config key '") + key + "': must be >= 0, got " + std::to_string(v));
        };
        nonneg("C_n", C_n);
        nonneg("d", d);
        nonneg("d_a", d_a);
        nonneg("d_p", d_p);
    }

    std::string canonical_text() const {
        std::ostringstream os;
        os << "C_v=" << C_v << "\nC_l=" << C_l << "\nC_m=" << C_m << "\nC_n=" << C_n << "\nd=" << d
           << "\nd_a=" << d_a << "\nd_p=" << d_p << "\nC_hp=" << C_hp << "\nr=" << r << "\nn=" << n << "\ng=" << g
           << "\nK=" << K << "\nvocab=" << vocab << "\nmode=" << (mode == Mode::Video ? "video" : "image")
           << "\ncmf=" << (cmf ? "true" : "false")
           << "\naar_adjacency=" << (aar_adjacency == AarAdjacency::AR ? "AR" : "DR") << "\nseed=" << seed
           << "\naar=" << (aar ? "true" : "false")
           << "\ns_includes_action=" << (s_includes_action ? "true" : "false")
           << "\ndecoupled_weight_decay=" << (decoupled_weight_decay ? "true" : "false")
           << "\nconvlstm_deep_to_shallow=" << (convlstm_deep_to_shallow ? "true" : "false") << "\n";
        return os.str();
    }

    std::uint64_t digest() const { return fnv1a64(canonical_text()); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace detail

/// Key=value lines; '#' starts a comment; unknown keys are rejected and
/// omitted keys keep their defaults (r=5, n=3, g=1, cmf=true, aar_adjacency=DR, ...).
inline Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line without '=': '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "C_v") cfg.C_v = detail::parse_int(key, val);
        else if (key == "C_l") cfg.C_l = detail::parse_int(key, val);
        else if (key == "C_m") cfg.C_m = detail::parse_int(key, val);
        else if (key == "C_n") cfg.C_n = detail::parse_int(key, val);
        else if (key == "d") cfg.d = detail::parse_int(key, val);
        else if (key == "d_a") cfg.d_a = detail::parse_int(key, val);
        else if (key == "d_p") cfg.d_p = detail::parse_int(key, val);
        else if (key == "C_hp") cfg.C_hp = detail::parse_int(key, val);
        else if (key == "r") cfg.r = detail::parse_int(key, val);
        else if (key == "n") cfg.n = detail::parse_int(key, val);
        else if (key == "g") cfg.g = detail::parse_int(key, val);
        else if (key == "K") cfg.K = detail::parse_int(key, val);
        else if (key == "vocab") cfg.vocab = detail::parse_int(key, val);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, val));
        else if (key == "mode") {
            if (val == "image") cfg.mode = Mode::Image;
            else if (val == "video") cfg.mode = Mode::Video;
            else throw ConfigError("config key 'mode': expected image|video, got '" + val + "'");
        } else if (key == "cmf") cfg.cmf = detail::parse_bool(key, val);
        else if (key == "aar_adjacency") {
            if (val == "DR") cfg.aar_adjacency = AarAdjacency::DR;
            else if (val == "AR") cfg.aar_adjacency = AarAdjacency::AR;
            else throw ConfigError("config key 'aar_adjacency': expected DR|AR, got '" + val + "'");
        } else if (key == "aar") cfg.aar = detail::parse_bool(key, val);
        else if (key == "s_includes_action") cfg.s_includes_action = detail::parse_bool(key, val);
        else if (key == "decoupled_weight_decay") cfg.decoupled_weight_decay = detail::parse_bool(key, val);
        else if (key == "convlstm_deep_to_shallow") cfg.convlstm_deep_to_shallow = detail::parse_bool(key, val);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config_text(os.str());
}

}  // namespace cmpc
