#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "duforge/taxonomy.hpp"

namespace duforge {

struct TokenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Uniform grid over each key's normalized [0,1] span.
struct QuantGrid {
    double delta = 0.01;

    explicit QuantGrid(double d = 0.01) : delta(d) {
        if (!(d > 0.0 && d <= 0.5))
            throw std::invalid_argument("QuantGrid: delta must be in (0, 0.5]");
    }

    int bin_count() const { return static_cast<int>(std::ceil(1.0 / delta)); }
};

// z = min(floor(u / delta), Z - 1) with u the range-normalized value.
// Out-of-range inputs clamp; the flag reports that it happened.
inline int quantize(double v, ParamKey key, const QuantGrid& grid, bool* clamped = nullptr) {
    ScalarRange r = key_range(key);
    double u = (v - r.lo) / (r.hi - r.lo);
    bool c = u < 0.0 || u > 1.0;
    if (clamped) *clamped = c;
    u = std::clamp(u, 0.0, 1.0);
    int z = static_cast<int>(std::floor(u / grid.delta));
    return std::min(z, grid.bin_count() - 1);
}

// Centroid reconstruction, capped so the top bin cannot leave the range when
// delta does not divide 1 evenly.
inline double dequantize(int z, ParamKey key, const QuantGrid& grid) {
    if (z < 0 || z >= grid.bin_count())
        throw TokenError("dequantize: bin index out of range");
    ScalarRange r = key_range(key);
    double u = std::min((z + 0.5) * grid.delta, 1.0);
    return r.lo + u * (r.hi - r.lo);
}

struct TypeToken {
    DegradationType type;
};
struct KeyToken {
    ParamKey key;
    // Nonzero only for map-valued keys; the stream needs the dims to decode.
    int map_w = 0;
    int map_h = 0;
};
struct ValueToken {
    int bin;
};

using Token = std::variant<TypeToken, KeyToken, ValueToken>;

struct TokenSeq {
    std::vector<Token> tokens;
};

// Grammar: TypeToken, then for each schema key in canonical order a KeyToken
// followed by that key's element count of ValueTokens (1 for scalars, 9 for
// the camera matrix, w*h for a map).
inline TokenSeq encode(const DegradationSpec& spec, const QuantGrid& grid) {
    if (spec.params.empty()) throw TokenError("encode: spec has no parameters");
    TokenSeq seq;
    seq.tokens.push_back(TypeToken{spec.type});
    for (ParamKey k : required_keys(spec.type)) {
        auto it = spec.params.find(k);
        if (it == spec.params.end())
            throw TokenError(std::string("encode: spec missing key ") + key_name(k));
        if (const double* s = std::get_if<double>(&it->second)) {
            seq.tokens.push_back(KeyToken{k});
            seq.tokens.push_back(ValueToken{quantize(*s, k, grid)});
        } else if (const Mat3* m = std::get_if<Mat3>(&it->second)) {
            seq.tokens.push_back(KeyToken{k});
            for (double e : m->m) seq.tokens.push_back(ValueToken{quantize(e, k, grid)});
        } else if (const ParamMap* pm = std::get_if<ParamMap>(&it->second)) {
            seq.tokens.push_back(KeyToken{k, pm->width, pm->height});
            for (double e : pm->data) seq.tokens.push_back(ValueToken{quantize(e, k, grid)});
        }
    }
    return seq;
}

inline DegradationSpec decode(const TokenSeq& seq, const QuantGrid& grid) {
    if (seq.tokens.empty()) throw TokenError("decode: empty token sequence");
    const TypeToken* tt = std::get_if<TypeToken>(&seq.tokens[0]);
    if (!tt) throw TokenError("decode: sequence must start with a type token");

    DegradationSpec spec;
    spec.type = tt->type;

    size_t i = 1;
    while (i < seq.tokens.size()) {
        const KeyToken* kt = std::get_if<KeyToken>(&seq.tokens[i]);
        if (!kt) throw TokenError("decode: expected a key token");
        ++i;
        std::vector<int> bins;
        while (i < seq.tokens.size()) {
            const ValueToken* vt = std::get_if<ValueToken>(&seq.tokens[i]);
            if (!vt) break;
            bins.push_back(vt->bin);
            ++i;
        }
        if (bins.empty()) throw TokenError("decode: key token without values");
        if (spec.params.count(kt->key)) throw TokenError("decode: duplicate key token");

        if (kt->map_w > 0 && kt->map_h > 0) {
            if (kt->key != ParamKey::Transmission)
                throw TokenError("decode: only t supports map values");
            if (bins.size() != static_cast<size_t>(kt->map_w) * kt->map_h)
                throw TokenError("decode: map value count does not match dims");
            ParamMap pm(kt->map_w, kt->map_h);
            for (size_t p = 0; p < bins.size(); ++p)
                pm.data[p] = dequantize(bins[p], kt->key, grid);
            spec.params[kt->key] = pm;
        } else if (kt->key == ParamKey::CamIntrinsics) {
            if (bins.size() != 9)
                throw TokenError("decode: cam needs exactly 9 value tokens");
            Mat3 m;
            for (int p = 0; p < 9; ++p) m.m[p] = dequantize(bins[p], kt->key, grid);
            spec.params[kt->key] = m;
        } else {
            if (bins.size() != 1)
                throw TokenError(std::string("decode: ") + key_name(kt->key) +
                                 " needs exactly one value token");
            spec.params[kt->key] = dequantize(bins[0], kt->key, grid);
        }
    }
    if (spec.params.empty()) throw TokenError("decode: sequence has no parameters");
    return spec;
}

// Text wire format, e.g. "T:haze K:A V:37 K:t V:12". A map key renders as
// K:t:WxH followed by its value tokens.
inline std::string render_tokens(const TokenSeq& seq) {
    std::ostringstream out;
    bool first = true;
    for (const Token& tok : seq.tokens) {
        if (!first) out << ' ';
        first = false;
        if (const TypeToken* t = std::get_if<TypeToken>(&tok)) {
            out << "T:" << type_name(t->type);
        } else if (const KeyToken* k = std::get_if<KeyToken>(&tok)) {
            out << "K:" << key_name(k->key);
            if (k->map_w > 0) out << ':' << k->map_w << 'x' << k->map_h;
        } else if (const ValueToken* v = std::get_if<ValueToken>(&tok)) {
            out << "V:" << v->bin;
        }
    }
    return out.str();
}

inline TokenSeq parse_tokens(const std::string& text) {
    TokenSeq seq;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        if (word.rfind("T:", 0) == 0) {
            auto t = type_from_name(word.substr(2));
            if (!t) throw TokenError("parse_tokens: unknown type in " + word);
            seq.tokens.push_back(TypeToken{*t});
        } else if (word.rfind("K:", 0) == 0) {
            std::string body = word.substr(2);
            KeyToken kt;
            auto dims_at = body.find(':');
            if (dims_at != std::string::npos) {
                std::string dims = body.substr(dims_at + 1);
                body = body.substr(0, dims_at);
                auto x_at = dims.find('x');
                if (x_at == std::string::npos)
                    throw TokenError("parse_tokens: bad map dims in " + word);
                try {
                    kt.map_w = std::stoi(dims.substr(0, x_at));
                    kt.map_h = std::stoi(dims.substr(x_at + 1));
                } catch (const std::exception&) {
                    throw TokenError("parse_tokens: bad map dims in " + word);
                }
                if (kt.map_w <= 0 || kt.map_h <= 0)
                    throw TokenError("parse_tokens: bad map dims in " + word);
            }
            auto k = key_from_name(body);
            if (!k) throw TokenError("parse_tokens: unknown key in " + word);
            kt.key = *k;
            seq.tokens.push_back(kt);
        } else if (word.rfind("V:", 0) == 0) {
            int bin;
            try {
                bin = std::stoi(word.substr(2));
            } catch (const std::exception&) {
                throw TokenError("parse_tokens: bad bin index in " + word);
            }
            if (bin < 0) throw TokenError("parse_tokens: negative bin index in " + word);
            seq.tokens.push_back(ValueToken{bin});
        } else {
            throw TokenError("parse_tokens: unrecognized token " + word);
        }
    }
    if (seq.tokens.empty()) throw TokenError("parse_tokens: empty token text");
    return seq;
}

} // namespace duforge
