#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace duforge {

enum class DegradationType { Haze, LowLight, Blur, LowRes };

enum class ParamKey {
    AtmosphericLight,   // A
    Transmission,       // t
    Gamma,              // gamma
    Gain,               // gain
    CamIntrinsics,      // cam
    Sigma,              // sigma
    Scale               // scale
};

constexpr std::array<DegradationType, 4> kAllTypes = {
    DegradationType::Haze, DegradationType::LowLight,
    DegradationType::Blur, DegradationType::LowRes};

// Row-major 3x3 matrix with the handful of operations the pipeline needs.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) -
               m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    Mat3 inverse() const {
        double d = det();
        if (std::fabs(d) < 1e-12) throw std::runtime_error("Mat3::inverse: singular matrix");
        Mat3 r;
        r.m[0] = (m[4] * m[8] - m[5] * m[7]) / d;
        r.m[1] = (m[2] * m[7] - m[1] * m[8]) / d;
        r.m[2] = (m[1] * m[5] - m[2] * m[4]) / d;
        r.m[3] = (m[5] * m[6] - m[3] * m[8]) / d;
        r.m[4] = (m[0] * m[8] - m[2] * m[6]) / d;
        r.m[5] = (m[2] * m[3] - m[0] * m[5]) / d;
        r.m[6] = (m[3] * m[7] - m[4] * m[6]) / d;
        r.m[7] = (m[1] * m[6] - m[0] * m[7]) / d;
        r.m[8] = (m[0] * m[4] - m[1] * m[3]) / d;
        return r;
    }

    void apply(const double in[3], double out[3]) const {
        out[0] = m[0] * in[0] + m[1] * in[1] + m[2] * in[2];
        out[1] = m[3] * in[0] + m[4] * in[1] + m[5] * in[2];
        out[2] = m[6] * in[0] + m[7] * in[1] + m[8] * in[2];
    }
};

// Single-channel parameter map (per-pixel transmission).
struct ParamMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ParamMap() = default;
    ParamMap(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("ParamMap: non-positive dims");
    }

    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
};

using ParamValue = std::variant<double, Mat3, ParamMap>;

struct DegradationSpec {
    DegradationType type;
    std::map<ParamKey, ParamValue> params;
};

inline const char* type_name(DegradationType t) {
    switch (t) {
        case DegradationType::Haze: return "haze";
        case DegradationType::LowLight: return "lowlight";
        case DegradationType::Blur: return "blur";
        case DegradationType::LowRes: return "lowres";
    }
    return "?";
}

inline std::optional<DegradationType> type_from_name(const std::string& s) {
    for (DegradationType t : kAllTypes)
        if (s == type_name(t)) return t;
    return std::nullopt;
}

inline const char* key_name(ParamKey k) {
    switch (k) {
        case ParamKey::AtmosphericLight: return "A";
        case ParamKey::Transmission: return "t";
        case ParamKey::Gamma: return "gamma";
        case ParamKey::Gain: return "gain";
        case ParamKey::CamIntrinsics: return "cam";
        case ParamKey::Sigma: return "sigma";
        case ParamKey::Scale: return "scale";
    }
    return "?";
}

inline std::optional<ParamKey> key_from_name(const std::string& s) {
    constexpr std::array<ParamKey, 7> all = {
        ParamKey::AtmosphericLight, ParamKey::Transmission, ParamKey::Gamma,
        ParamKey::Gain, ParamKey::CamIntrinsics, ParamKey::Sigma, ParamKey::Scale};
    for (ParamKey k : all)
        if (s == key_name(k)) return k;
    return std::nullopt;
}

// Fixed parameter schema per type.
inline const std::vector<ParamKey>& required_keys(DegradationType t) {
    static const std::vector<ParamKey> haze = {ParamKey::AtmosphericLight,
                                              ParamKey::Transmission};
    static const std::vector<ParamKey> lowlight = {ParamKey::Gamma, ParamKey::Gain,
                                                   ParamKey::CamIntrinsics};
    static const std::vector<ParamKey> blur = {ParamKey::Sigma};
    static const std::vector<ParamKey> lowres = {ParamKey::Scale};
    switch (t) {
        case DegradationType::Haze: return haze;
        case DegradationType::LowLight: return lowlight;
        case DegradationType::Blur: return blur;
        case DegradationType::LowRes: return lowres;
    }
    return blur;
}

struct ScalarRange {
    double lo;
    double hi;
};

// Value windows used by quantization normalization and by validity gating.
// Gain's open lower end and Sigma's open lower end are handled in
// validate_spec; the closed window here is the quantization span.
inline ScalarRange key_range(ParamKey k) {
    switch (k) {
        case ParamKey::AtmosphericLight: return {0.6, 1.0};
        case ParamKey::Transmission: return {0.1, 0.95};
        case ParamKey::Gamma: return {1.2, 4.0};
        case ParamKey::Gain: return {0.0, 1.0};
        case ParamKey::CamIntrinsics: return {-1.5, 1.5};
        case ParamKey::Sigma: return {0.0, 8.0};
        case ParamKey::Scale: return {2.0, 4.0};
    }
    return {0.0, 1.0};
}

// Decoded scale values sit on bin centroids, so exact set membership would
// reject nearly every dequantized prediction. Accept within 0.25 of an
// allowed integer; consumers snap with snap_scale.
inline bool scale_is_valid(double v) {
    double r = std::round(v);
    return (r == 2.0 || r == 3.0 || r == 4.0) && std::fabs(v - r) <= 0.25;
}

inline int snap_scale(double v) {
    if (!scale_is_valid(v)) throw std::invalid_argument("snap_scale: value not near {2,3,4}");
    return static_cast<int>(std::round(v));
}

struct ValidationIssue {
    std::string message;
};

// Structural and range validation shared by the reward gate and the CLI.
// Returns every problem found, empty when the spec is well-formed.
inline std::vector<ValidationIssue> validate_spec(const DegradationSpec& spec) {
    std::vector<ValidationIssue> issues;
    const auto& req = required_keys(spec.type);

    for (ParamKey k : req)
        if (!spec.params.count(k))
            issues.push_back({std::string("missing key ") + key_name(k)});
    for (const auto& [k, v] : spec.params) {
        bool wanted = false;
        for (ParamKey r : req) wanted |= (r == k);
        if (!wanted) {
            issues.push_back({std::string("unexpected key ") + key_name(k)});
            continue;
        }

        ScalarRange range = key_range(k);
        if (k == ParamKey::CamIntrinsics) {
            const Mat3* m = std::get_if<Mat3>(&v);
            if (!m) {
                issues.push_back({"cam must be a 3x3 matrix"});
                continue;
            }
            for (double e : m->m)
                if (e < range.lo || e > range.hi) {
                    issues.push_back({"cam entry out of [-1.5, 1.5]"});
                    break;
                }
            if (std::fabs(m->det()) < 1e-3)
                issues.push_back({"cam determinant below 1e-3"});
        } else if (k == ParamKey::Transmission) {
            if (const double* s = std::get_if<double>(&v)) {
                if (*s < range.lo || *s > range.hi)
                    issues.push_back({"t out of [0.1, 0.95]"});
            } else if (const ParamMap* m = std::get_if<ParamMap>(&v)) {
                for (double e : m->data)
                    if (e < range.lo || e > range.hi) {
                        issues.push_back({"t map entry out of [0.1, 0.95]"});
                        break;
                    }
            } else {
                issues.push_back({"t must be a scalar or a map"});
            }
        } else {
            const double* s = std::get_if<double>(&v);
            if (!s) {
                issues.push_back({std::string(key_name(k)) + " must be a scalar"});
                continue;
            }
            switch (k) {
                case ParamKey::Gain:
                    if (!(*s > 0.0 && *s <= 1.0)) issues.push_back({"gain out of (0, 1]"});
                    break;
                case ParamKey::Sigma:
                    if (!(*s > 0.0 && *s <= 8.0)) issues.push_back({"sigma out of (0, 8]"});
                    break;
                case ParamKey::Scale:
                    if (!scale_is_valid(*s)) issues.push_back({"scale not near {2, 3, 4}"});
                    break;
                default:
                    if (*s < range.lo || *s > range.hi)
                        issues.push_back({std::string(key_name(k)) + " out of range"});
            }
        }
    }
    return issues;
}

inline bool spec_is_valid(const DegradationSpec& spec) {
    return validate_spec(spec).empty();
}

// Convenience accessors; throw on schema misuse so callers do not need to
// re-validate at every site.
inline double scalar_param(const DegradationSpec& spec, ParamKey k) {
    auto it = spec.params.find(k);
    if (it == spec.params.end())
        throw std::invalid_argument(std::string("missing parameter ") + key_name(k));
    const double* s = std::get_if<double>(&it->second);
    if (!s) throw std::invalid_argument(std::string(key_name(k)) + " is not a scalar");
    return *s;
}

inline const Mat3& mat_param(const DegradationSpec& spec, ParamKey k) {
    auto it = spec.params.find(k);
    if (it == spec.params.end())
        throw std::invalid_argument(std::string("missing parameter ") + key_name(k));
    const Mat3* m = std::get_if<Mat3>(&it->second);
    if (!m) throw std::invalid_argument(std::string(key_name(k)) + " is not a matrix");
    return *m;
}

} // namespace duforge
