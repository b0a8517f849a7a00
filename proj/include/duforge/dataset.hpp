#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "duforge/degrade.hpp"
#include "duforge/image.hpp"
#include "duforge/png_io.hpp"
#include "duforge/reward.hpp"
#include "duforge/rng.hpp"
#include "duforge/spec_io.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamDistribution {
    double mean = 0.0;
    double stddev = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

struct BuildConfig {
    int count = 40;  // total; divided equally across the four types
    int width = 128;
    int height = 128;
    uint64_t master_seed = 1;
    // Train : val : test. Seats are assigned by largest remainder so the
    // realized sizes match the fractions as closely as integers allow.
    double split_train = 103.0 / 110.0;
    double split_val = 4.0 / 110.0;
    double split_test = 3.0 / 110.0;
    std::string source_dir;  // empty selects the procedural generator
    int clean_pool = 16;     // procedural source images, used round-robin
    std::map<std::string, ParamDistribution> dist;
};

inline BuildConfig default_build_config() {
    BuildConfig cfg;
    cfg.dist["A"] = {0.8, 0.1, 0.6, 1.0};
    cfg.dist["t"] = {0.45, 0.15, 0.1, 0.95};
    cfg.dist["gamma"] = {2.7, 0.5, 1.2, 4.0};
    cfg.dist["gain"] = {0.08, 0.04, 1e-3, 1.0};
    cfg.dist["cam"] = {0.0, 0.1, -1.5, 1.5};  // per-entry perturbation around identity
    cfg.dist["sigma"] = {3.0, 1.0, 1e-3, 8.0};
    return cfg;
}

namespace detail {

inline const ParamDistribution& dist_for(const BuildConfig& cfg, const std::string& key) {
    auto it = cfg.dist.find(key);
    if (it == cfg.dist.end())
        throw DatasetError("sample_spec: no distribution configured for key " + key);
    if (it->second.lo >= it->second.hi)
        throw DatasetError("sample_spec: impossible truncation for key " + key);
    return it->second;
}

inline double draw(Rng& rng, const ParamDistribution& d) {
    return rng.truncated_normal(d.mean, d.stddev, d.lo, d.hi);
}

} // namespace detail

// Deterministic parameter draw. The per-key order is fixed; changing it
// changes every downstream dataset.
inline DegradationSpec sample_spec(DegradationType type, const BuildConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    DegradationSpec spec;
    spec.type = type;
    switch (type) {
        case DegradationType::Haze:
            spec.params[ParamKey::AtmosphericLight] = detail::draw(rng, detail::dist_for(cfg, "A"));
            spec.params[ParamKey::Transmission] = detail::draw(rng, detail::dist_for(cfg, "t"));
            break;
        case DegradationType::LowLight: {
            spec.params[ParamKey::Gamma] = detail::draw(rng, detail::dist_for(cfg, "gamma"));
            spec.params[ParamKey::Gain] = detail::draw(rng, detail::dist_for(cfg, "gain"));
            const auto& cd = detail::dist_for(cfg, "cam");
            Mat3 cam;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                cam = Mat3::identity();
                bool in_range = true;
                for (int i = 0; i < 9; ++i) {
                    cam.m[i] += rng.normal(cd.mean, cd.stddev);
                    if (cam.m[i] < cd.lo || cam.m[i] > cd.hi) in_range = false;
                }
                if (in_range && std::fabs(cam.det()) >= 1e-3) break;
            }
            spec.params[ParamKey::CamIntrinsics] = cam;
            break;
        }
        case DegradationType::Blur:
            spec.params[ParamKey::Sigma] = detail::draw(rng, detail::dist_for(cfg, "sigma"));
            break;
        case DegradationType::LowRes:
            spec.params[ParamKey::Scale] = static_cast<double>(2 + rng.below(3));
            break;
    }
    if (!spec_is_valid(spec))
        throw DatasetError("sample_spec: drawn parameters violate the spec invariants");
    return spec;
}

namespace detail {

// Coarse grid of uniform values sampled bilinearly; band-limited texture
// with energy concentrated around 1/cell cycles per pixel.
inline void add_value_noise(Image& img, Rng& rng, int cell, double amp) {
    int nx = img.width / cell + 2, ny = img.height / cell + 2;
    std::vector<double> grid(static_cast<size_t>(nx) * ny * 3);
    for (double& g : grid) g = rng.uniform(-1.0, 1.0);

    for (int y = 0; y < img.height; ++y) {
        double gy = static_cast<double>(y) / cell;
        int y0 = static_cast<int>(gy);
        double fy = gy - y0;
        for (int x = 0; x < img.width; ++x) {
            double gx = static_cast<double>(x) / cell;
            int x0 = static_cast<int>(gx);
            double fx = gx - x0;
            for (int c = 0; c < 3; ++c) {
                auto g = [&](int xx, int yy) {
                    return grid[(static_cast<size_t>(yy) * nx + xx) * 3 + c];
                };
                double v = (1 - fx) * (1 - fy) * g(x0, y0) + fx * (1 - fy) * g(x0 + 1, y0) +
                           (1 - fx) * fy * g(x0, y0 + 1) + fx * fy * g(x0 + 1, y0 + 1);
                img.at(x, y, c) += amp * v;
            }
        }
    }
}

} // namespace detail

// Deterministic synthetic clean frame: smooth two-tone base, band-limited
// texture, opaque rectangles and disks (one forced dark, one forced bright
// neutral), and a little fine-grain noise. Mean luminance is recentered
// into [0.35, 0.65].
inline Image procedural_clean(uint64_t seed, int w, int h) {
    if (w < 32 || h < 32) throw DatasetError("procedural_clean: dims must be at least 32");
    Rng rng(seed);
    Image img(w, h, Encoding::Srgb);

    double g0[3], g1[3];
    double base0 = rng.uniform(0.3, 0.55), base1 = rng.uniform(0.35, 0.6);
    for (int c = 0; c < 3; ++c) {
        g0[c] = base0 + rng.uniform(-0.06, 0.06);
        g1[c] = base1 + rng.uniform(-0.06, 0.06);
    }
    double fx = rng.uniform(0.5, 1.6), fy = rng.uniform(0.5, 1.6);
    double phase = rng.uniform(0.0, 6.283185307179586);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.5 + 0.5 * std::sin(6.283185307179586 *
                                                (fx * x / static_cast<double>(w) +
                                                 fy * y / static_cast<double>(h)) +
                                            phase);
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = g0[c] + s * (g1[c] - g0[c]);
        }

    detail::add_value_noise(img, rng, 16, 0.1);
    detail::add_value_noise(img, rng, 6, 0.05);

    auto draw_rect = [&](double v0, double v1, double spread) {
        int rw = static_cast<int>(rng.uniform(0.12, 0.35) * w);
        int rh = static_cast<int>(rng.uniform(0.12, 0.35) * h);
        int x0 = rng.below(static_cast<uint64_t>(std::max(1, w - rw)));
        int y0 = rng.below(static_cast<uint64_t>(std::max(1, h - rh)));
        double col[3];
        double base = rng.uniform(v0, v1);
        for (int c = 0; c < 3; ++c) col[c] = base + rng.uniform(-spread, spread);
        for (int y = y0; y < y0 + rh; ++y)
            for (int x = x0; x < x0 + rw; ++x)
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
    };
    auto draw_disk = [&](double v0, double v1, double spread) {
        int r = static_cast<int>(rng.uniform(0.06, 0.16) * std::min(w, h));
        int cx = r + static_cast<int>(rng.below(static_cast<uint64_t>(std::max(1, w - 2 * r))));
        int cy = r + static_cast<int>(rng.below(static_cast<uint64_t>(std::max(1, h - 2 * r))));
        double col[3];
        double base = rng.uniform(v0, v1);
        for (int c = 0; c < 3; ++c) col[c] = base + rng.uniform(-spread, spread);
        for (int y = cy - r; y <= cy + r; ++y)
            for (int x = cx - r; x <= cx + r; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
                    for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
    };

    draw_rect(0.03, 0.1, 0.015);   // dark anchor for the dark-channel prior
    draw_rect(0.88, 0.97, 0.015);  // bright neutral anchor for gain recovery
    int extra = 3 + static_cast<int>(rng.below(4));
    for (int i = 0; i < extra; ++i) {
        if (rng.below(2) == 0)
            draw_rect(0.15, 0.85, 0.06);
        else
            draw_disk(0.15, 0.85, 0.06);
    }

    detail::add_value_noise(img, rng, 2, 0.04);
    for (double& v : img.data) v += rng.uniform(-0.012, 0.012);
    clamp_image(img);

    for (int iter = 0; iter < 6; ++iter) {
        double m = mean_intensity(img);
        if (m >= 0.38 && m <= 0.62) break;
        double shift = 0.8 * std::clamp(0.5 - m, -0.3, 0.3);
        for (double& v : img.data) v = clamp01(v + shift);
    }
    return img;
}

inline Json build_config_to_json(const BuildConfig& cfg) {
    Json j;
    j["count"] = cfg.count;
    j["width"] = cfg.width;
    j["height"] = cfg.height;
    j["master_seed"] = cfg.master_seed;
    j["split_fractions"] = Json::array({cfg.split_train, cfg.split_val, cfg.split_test});
    if (!cfg.source_dir.empty()) j["source_dir"] = cfg.source_dir;
    j["clean_pool"] = cfg.clean_pool;
    Json d;
    for (const auto& [key, pd] : cfg.dist)
        d[key] = {{"mean", pd.mean}, {"stddev", pd.stddev}, {"lo", pd.lo}, {"hi", pd.hi}};
    j["distributions"] = d;
    return j;
}

// Missing fields keep their defaults; distribution entries override per key.
inline BuildConfig build_config_from_json(const Json& j) {
    BuildConfig cfg = default_build_config();
    try {
        if (j.contains("count")) cfg.count = j["count"].get<int>();
        if (j.contains("width")) cfg.width = j["width"].get<int>();
        if (j.contains("height")) cfg.height = j["height"].get<int>();
        if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<uint64_t>();
        if (j.contains("split_fractions")) {
            const auto& f = j["split_fractions"];
            cfg.split_train = f.at(0).get<double>();
            cfg.split_val = f.at(1).get<double>();
            cfg.split_test = f.at(2).get<double>();
        }
        if (j.contains("source_dir")) cfg.source_dir = j["source_dir"].get<std::string>();
        if (j.contains("clean_pool")) cfg.clean_pool = j["clean_pool"].get<int>();
        if (j.contains("distributions"))
            for (const auto& [key, pd] : j["distributions"].items()) {
                ParamDistribution d = cfg.dist.count(key) ? cfg.dist[key] : ParamDistribution{};
                if (pd.contains("mean")) d.mean = pd["mean"].get<double>();
                if (pd.contains("stddev")) d.stddev = pd["stddev"].get<double>();
                if (pd.contains("lo")) d.lo = pd["lo"].get<double>();
                if (pd.contains("hi")) d.hi = pd["hi"].get<double>();
                cfg.dist[key] = d;
            }
    } catch (const Json::exception& e) {
        throw DatasetError(std::string("build config: ") + e.what());
    }
    return cfg;
}

inline BuildConfig load_build_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open config: " + path);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DatasetError("config is not valid structured text: " + path);
    return build_config_from_json(j);
}

struct ManifestRecord {
    std::string id;
    std::string clean_path;     // relative to the manifest directory
    std::string degraded_path;  // relative to the manifest directory
    DegradationSpec spec;
    uint64_t seed = 0;
    std::string split;
    std::optional<std::pair<int, int>> crop_applied;  // clean dims after crop
};

inline Json record_to_json(const ManifestRecord& rec) {
    Json j;
    j["id"] = rec.id;
    j["clean_path"] = rec.clean_path;
    j["degraded_path"] = rec.degraded_path;
    j["spec"] = spec_to_json(rec.spec);
    j["seed"] = rec.seed;
    j["split"] = rec.split;
    if (rec.crop_applied)
        j["crop_applied"] = Json::array({rec.crop_applied->first, rec.crop_applied->second});
    return j;
}

inline ManifestRecord record_from_json(const Json& j) {
    ManifestRecord rec;
    try {
        rec.id = j.at("id").get<std::string>();
        rec.clean_path = j.at("clean_path").get<std::string>();
        rec.degraded_path = j.at("degraded_path").get<std::string>();
        rec.spec = spec_from_json(j.at("spec"));
        rec.seed = j.at("seed").get<uint64_t>();
        rec.split = j.at("split").get<std::string>();
        if (j.contains("crop_applied"))
            rec.crop_applied = {j["crop_applied"].at(0).get<int>(),
                                j["crop_applied"].at(1).get<int>()};
    } catch (const Json::exception& e) {
        throw DatasetError(std::string("manifest record: ") + e.what());
    }
    if (rec.split != "train" && rec.split != "val" && rec.split != "test")
        throw DatasetError("manifest record: unknown split " + rec.split);
    return rec;
}

inline std::vector<ManifestRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open manifest: " + path);
    std::vector<ManifestRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DatasetError("manifest: unparseable line");
        records.push_back(record_from_json(j));
    }
    return records;
}

namespace detail {

// Largest-remainder seat assignment; ties go to the lower bucket index so
// the result never depends on sort stability.
inline std::array<int, 3> split_sizes(int total, double ftrain, double fval, double ftest) {
    double sum = ftrain + fval + ftest;
    if (!(sum > 0.999 && sum < 1.001))
        throw DatasetError("split fractions must sum to 1");
    double want[3] = {ftrain * total, fval * total, ftest * total};
    std::array<int, 3> out;
    int used = 0;
    double rem[3];
    for (int i = 0; i < 3; ++i) {
        out[i] = static_cast<int>(std::floor(want[i] + 1e-9));
        rem[i] = want[i] - out[i];
        used += out[i];
    }
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
        if (rem[a] != rem[b]) return rem[a] > rem[b];
        return a < b;
    });
    for (int k = 0; used + k < total; ++k) out[order[k % 3]]++;
    return out;
}

// Per-type no-op gates. Haze and low-light must shift mean intensity by at
// least 1%; blur must reduce mean gradient magnitude by at least 1% (its
// mean intensity is preserved by construction); low-res always changes the
// frame because the factor is at least 2.
inline bool degradation_visible(DegradationType type, const Image& clean, const Image& deg) {
    switch (type) {
        case DegradationType::Haze:
        case DegradationType::LowLight: {
            double mc = mean_intensity(clean);
            return std::fabs(mean_intensity(deg) - mc) >= 0.01 * std::max(mc, 1e-6);
        }
        case DegradationType::Blur: {
            double tc = total_variation(clean);
            return tc - total_variation(deg) >= 0.01 * std::max(tc, 1e-9);
        }
        case DegradationType::LowRes:
            return deg.width != clean.width || deg.height != clean.height;
    }
    return false;
}

} // namespace detail

struct BuildResult {
    std::string manifest_path;
    int count = 0;
};

// Deterministic parallel build. Each sample owns a seed derived from
// (master_seed, index), so the outcome is identical for any worker count;
// the manifest is assembled in index order and written once at the end.
inline BuildResult build_dataset(const BuildConfig& cfg, const std::string& out_dir,
                                 int threads = 1) {
    namespace fs = std::filesystem;
    if (cfg.count <= 0 || cfg.count % 4 != 0)
        throw DatasetError("build: count must be a positive multiple of 4");
    if (threads < 1) threads = 1;

    std::vector<Image> pool;
    if (cfg.source_dir.empty()) {
        if (cfg.clean_pool < 1) throw DatasetError("build: clean_pool must be positive");
        for (int k = 0; k < cfg.clean_pool; ++k)
            pool.push_back(procedural_clean(derive_seed(cfg.master_seed, 0x100000000ull + k),
                                            cfg.width, cfg.height));
    } else {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cfg.source_dir))
            if (e.path().extension() == ".png") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DatasetError("build: no .png files in " + cfg.source_dir);
        for (const auto& p : files) pool.push_back(load_png(p.string()));
    }

    int n = cfg.count;
    auto sizes = detail::split_sizes(n, cfg.split_train, cfg.split_val, cfg.split_test);
    std::vector<std::string> split_of(n);
    {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        Rng rng(derive_seed(cfg.master_seed, 0x200000000ull));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.below(static_cast<uint64_t>(i + 1))]);
        for (int k = 0; k < n; ++k)
            split_of[order[k]] = k < sizes[0] ? "train" : (k < sizes[0] + sizes[1] ? "val" : "test");
    }

    fs::create_directories(fs::path(out_dir) / "images");
    std::vector<ManifestRecord> records(n);
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                DegradationType type = kAllTypes[i % 4];
                uint64_t seed_i = derive_seed(cfg.master_seed, static_cast<uint64_t>(i));
                const Image& src = pool[static_cast<size_t>(i) % pool.size()];

                DegradationSpec spec;
                Image clean_q, deg;
                std::optional<std::pair<int, int>> crop;
                bool ok = false;
                for (uint64_t attempt = 0; attempt < 20 && !ok; ++attempt) {
                    spec = sample_spec(type, cfg, derive_seed(seed_i, attempt));
                    Image clean = src;
                    crop.reset();
                    if (type == DegradationType::LowRes) {
                        int s = snap_scale(scalar_param(spec, ParamKey::Scale));
                        clean = center_crop_to_multiple(clean, s);
                        if (clean.width != src.width || clean.height != src.height)
                            crop = {clean.width, clean.height};
                    }
                    // Stored frames are 8-bit; degrading the already
                    // quantized clean keeps records exactly reproducible
                    // from their files.
                    clean_q = quantize_to_8bit(clean);
                    deg = degrade(clean_q, spec);
                    ok = detail::degradation_visible(type, clean_q, deg);
                }
                if (!ok) throw DatasetError("build: could not draw a visible degradation");

                ManifestRecord rec;
                char id[16];
                std::snprintf(id, sizeof id, "s%06d", i);
                rec.id = id;
                rec.clean_path = std::string("images/") + id + "_clean.png";
                rec.degraded_path = std::string("images/") + id + "_deg.png";
                rec.spec = spec;
                rec.seed = seed_i;
                rec.split = split_of[i];
                rec.crop_applied = crop;

                save_png(clean_q, (fs::path(out_dir) / rec.clean_path).string());
                save_png(deg, (fs::path(out_dir) / rec.degraded_path).string());
                records[i] = std::move(rec);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };

    std::vector<std::thread> crew;
    for (int t = 0; t < std::min(threads, n); ++t) crew.emplace_back(worker);
    for (auto& t : crew) t.join();

    std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    if (failed.load()) {
        std::error_code ec;
        fs::remove(manifest_path, ec);  // never leave a half-described build behind
        throw DatasetError("build failed: " + first_error);
    }

    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot write manifest: " + manifest_path);
    for (const auto& rec : records) out << record_to_json(rec).dump() << "\n";
    out.close();
    return {manifest_path, n};
}

} // namespace duforge
