// Command-line surface over the degradation engine. Exit codes: 0 success,
// 1 operational failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "duforge/duforge.hpp"

namespace fs = std::filesystem;
using namespace duforge;

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        size_t used = 0;
        double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad number in list: " + item);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty number list");
    return out;
}

uint64_t master_seed_from_env(uint64_t fallback) {
    const char* env = std::getenv("DUFORGE_SEED");
    if (!env || !*env) return fallback;
    return std::stoull(env);
}

Json prediction_to_json(const Prediction& pred) {
    Json j;
    j["spec"] = spec_to_json(pred.spec);
    j["confidence"] = pred.confidence;
    j["low_confidence"] = pred.low_confidence;
    Json f;
    for (const auto& [k, v] : pred.features) f[k] = v;
    j["features"] = f;
    return j;
}

void write_cues(const Image& img, const std::string& fft_path, const std::string& edge_path) {
    CompositeInput cues = build_composite(img);
    save_png(cues.fft, fft_path);
    save_png(cues.edge, edge_path);
}

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"duforge: parametric image degradation, restoration, and evaluation"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "cap internal parallelism")->capture_default_str();

    std::function<int()> action;

    // ---- degrade ----
    {
        auto* sub = app.add_subcommand("degrade", "apply a degradation spec to an image");
        auto in = std::make_shared<std::string>();
        auto spec_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        sub->add_option("--in", *in, "input PNG")->required();
        sub->add_option("--spec", *spec_path, "degradation spec document")->required();
        sub->add_option("--out", *out, "output PNG")->required();
        sub->callback([&action, in, spec_path, out]() {
            action = [in, spec_path, out]() {
                Image img = load_png(*in);
                DegradationSpec spec = load_spec(*spec_path);
                save_png(degrade(img, spec), *out);
                return 0;
            };
        });
    }

    // ---- restore ----
    {
        auto* sub = app.add_subcommand("restore", "invert a degradation given its spec");
        auto in = std::make_shared<std::string>();
        auto spec_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto lambda = std::make_shared<double>(1e-3);
        auto external = std::make_shared<std::string>();
        sub->add_option("--in", *in, "degraded PNG")->required();
        sub->add_option("--spec", *spec_path, "degradation spec document")->required();
        sub->add_option("--out", *out, "output PNG")->required();
        sub->add_option("--wiener-lambda", *lambda, "deconvolution regularizer")
            ->capture_default_str();
        sub->add_option("--external", *external,
                        "shell command implementing the child-process restorer protocol");
        sub->callback([&action, in, spec_path, out, lambda, external]() {
            action = [in, spec_path, out, lambda, external]() {
                Image img = load_png(*in);
                DegradationSpec spec = load_spec(*spec_path);
                Image restored;
                if (!external->empty()) {
                    restored = run_process_restorer(*external, img, spec);
                } else {
                    RestoreOptions opts;
                    opts.wiener_lambda = *lambda;
                    restored = restore(img, spec, opts);
                }
                save_png(restored, *out);
                return 0;
            };
        });
    }

    // ---- estimate ----
    {
        auto* sub = app.add_subcommand("estimate", "blind degradation prediction");
        auto in = std::make_shared<std::string>();
        auto emit_cues = std::make_shared<bool>(false);
        sub->add_option("--in", *in, "degraded PNG")->required();
        sub->add_flag("--emit-cues", *emit_cues, "also write FFT and edge cue images");
        sub->callback([&action, in, emit_cues]() {
            action = [in, emit_cues]() {
                Image img = load_png(*in);
                Prediction pred = predict(img);
                std::cout << prediction_to_json(pred).dump(2) << "\n";
                if (*emit_cues) {
                    fs::path p(*in);
                    std::string stem = (p.parent_path() / p.stem()).string();
                    write_cues(img, stem + "_fft.png", stem + "_edge.png");
                }
                return 0;
            };
        });
    }

    // ---- cues ----
    {
        auto* sub = app.add_subcommand("cues", "write the auxiliary cue images");
        auto in = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        sub->add_option("--in", *in, "input PNG")->required();
        sub->add_option("--out-dir", *out_dir, "output directory")->required();
        sub->callback([&action, in, out_dir]() {
            action = [in, out_dir]() {
                fs::create_directories(*out_dir);
                Image img = load_png(*in);
                write_cues(img, (fs::path(*out_dir) / "fft.png").string(),
                           (fs::path(*out_dir) / "edge.png").string());
                return 0;
            };
        });
    }

    // ---- tokenize ----
    {
        auto* sub = app.add_subcommand("tokenize", "render a spec as a token line");
        auto spec_path = std::make_shared<std::string>();
        auto delta = std::make_shared<double>(0.01);
        sub->add_option("--spec", *spec_path, "degradation spec document")->required();
        sub->add_option("--delta", *delta, "quantization bin width")->capture_default_str();
        sub->callback([&action, spec_path, delta]() {
            action = [spec_path, delta]() {
                DegradationSpec spec = load_spec(*spec_path);
                std::cout << render_tokens(encode(spec, QuantGrid(*delta))) << "\n";
                return 0;
            };
        });
    }

    // ---- detokenize ----
    {
        auto* sub = app.add_subcommand("detokenize", "decode a token line back into a spec");
        auto tokens = std::make_shared<std::string>();
        auto delta = std::make_shared<double>(0.01);
        sub->add_option("--tokens", *tokens, "token text")->required();
        sub->add_option("--delta", *delta, "quantization bin width")->capture_default_str();
        sub->callback([&action, tokens, delta]() {
            action = [tokens, delta]() {
                DegradationSpec spec = decode(parse_tokens(*tokens), QuantGrid(*delta));
                std::cout << spec_to_json(spec).dump(2) << "\n";
                return 0;
            };
        });
    }

    // ---- eval ----
    {
        auto* sub = app.add_subcommand("eval", "score a prediction file against a manifest");
        auto pred_path = std::make_shared<std::string>();
        auto manifest_path = std::make_shared<std::string>();
        auto out_csv = std::make_shared<std::string>();
        sub->add_option("--pred", *pred_path,
                        "prediction lines: one {\"id\":..., \"prediction\": <spec>} per line")
            ->required();
        sub->add_option("--manifest", *manifest_path, "dataset manifest")->required();
        sub->add_option("--out-csv", *out_csv, "metrics table destination")->required();
        sub->callback([&action, pred_path, manifest_path, out_csv]() {
            action = [pred_path, manifest_path, out_csv]() {
                auto records = load_manifest(*manifest_path);
                std::map<std::string, const ManifestRecord*> by_id;
                for (const auto& r : records) by_id[r.id] = &r;

                std::ifstream in(*pred_path);
                if (!in) throw std::runtime_error("cannot open predictions: " + *pred_path);
                std::vector<SampleScore> scores;
                std::string line;
                int lineno = 0;
                while (std::getline(in, line)) {
                    ++lineno;
                    if (line.empty()) continue;
                    Json j = Json::parse(line, nullptr, false);
                    if (j.is_discarded() || !j.contains("id") || !j.contains("prediction"))
                        throw std::runtime_error("predictions line " + std::to_string(lineno) +
                                                 ": expected {id, prediction}");
                    auto it = by_id.find(j["id"].get<std::string>());
                    if (it == by_id.end())
                        throw std::runtime_error("predictions line " + std::to_string(lineno) +
                                                 ": unknown id");
                    DegradationSpec pred = spec_from_json(j["prediction"]);
                    scores.push_back(score_understanding(pred, it->second->spec));
                }
                EvalReport rep = aggregate(scores);

                std::ofstream csv(*out_csv, std::ios::trunc);
                if (!csv) throw std::runtime_error("cannot write " + *out_csv);
                csv << "metric,value\n";
                csv << "t_acc," << csv_num(rep.type_accuracy) << "\n";
                csv << "macro_f1," << csv_num(rep.type_macro_f1) << "\n";
                csv << "j_acc," << csv_num(rep.joint_accuracy) << "\n";
                csv << "p_abs_mean," << csv_num(rep.p_abs_mean) << "\n";
                csv << "p_rel_mean," << csv_num(rep.p_rel_mean) << "\n";
                for (const auto& [k, v] : rep.p_abs_by_key)
                    csv << "p_abs." << key_name(k) << "," << csv_num(v) << "\n";
                for (const auto& [k, v] : rep.p_rel_by_key)
                    csv << "p_rel." << key_name(k) << "," << csv_num(v) << "\n";

                std::cout << "samples " << rep.sample_count << "  t_acc "
                          << csv_num(rep.type_accuracy) << "  macro_f1 "
                          << csv_num(rep.type_macro_f1) << "  j_acc "
                          << csv_num(rep.joint_accuracy) << "\n";
                return 0;
            };
        });
    }

    // ---- build-dataset ----
    {
        auto* sub = app.add_subcommand("build-dataset", "generate a degradation dataset");
        auto config_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        sub->add_option("--config", *config_path, "build config document (defaults when absent)");
        sub->add_option("--out", *out_dir, "output directory")->required();
        sub->callback([&action, &threads, config_path, out_dir]() {
            action = [&threads, config_path, out_dir]() {
                BuildConfig cfg = config_path->empty() ? default_build_config()
                                                       : load_build_config(*config_path);
                cfg.master_seed = master_seed_from_env(cfg.master_seed);
                BuildResult res = build_dataset(cfg, *out_dir, threads);
                std::cout << res.manifest_path << " (" << res.count << " samples)\n";
                return 0;
            };
        });
    }

    // ---- sensitivity ----
    {
        auto* sub = app.add_subcommand("sensitivity",
                                       "restoration fidelity vs parameter error sweep");
        auto manifest_path = std::make_shared<std::string>();
        auto param = std::make_shared<std::string>();
        auto errors = std::make_shared<std::string>();
        auto out_csv = std::make_shared<std::string>();
        auto max_samples = std::make_shared<int>(0);
        sub->add_option("--manifest", *manifest_path, "dataset manifest")->required();
        sub->add_option("--param", *param, "parameter key to perturb")->required();
        sub->add_option("--errors", *errors, "comma-separated error offsets")->required();
        sub->add_option("--out-csv", *out_csv, "per-offset table destination")->required();
        sub->add_option("--max-samples", *max_samples, "cap records used (0 = all)")
            ->capture_default_str();
        sub->callback([&action, manifest_path, param, errors, out_csv, max_samples]() {
            action = [manifest_path, param, errors, out_csv, max_samples]() {
                auto key = key_from_name(*param);
                if (!key) throw std::runtime_error("unknown parameter key: " + *param);
                auto records = load_manifest(*manifest_path);
                std::string base = fs::path(*manifest_path).parent_path().string();
                SensitivityReport rep = run_sensitivity(records, base, *key,
                                                        parse_double_list(*errors), {},
                                                        *max_samples);

                std::ofstream csv(*out_csv, std::ios::trunc);
                if (!csv) throw std::runtime_error("cannot write " + *out_csv);
                csv << "offset,mean_psnr,mean_ssim,samples\n";
                for (const auto& row : rep.rows)
                    csv << csv_num(row.offset) << "," << csv_num(row.mean_psnr) << ","
                        << csv_num(row.mean_ssim) << "," << row.samples << "\n";
                csv << "pearson_r," << csv_num(rep.pearson_abs_err_psnr) << ","
                    << csv_num(rep.pearson_abs_err_ssim) << ",\n";

                std::cout << "pearson r(|err|, psnr) = " << csv_num(rep.pearson_abs_err_psnr)
                          << "\npearson r(|err|, ssim) = " << csv_num(rep.pearson_abs_err_ssim)
                          << "\n";
                return 0;
            };
        });
    }

    // ---- verify-bounds ----
    {
        auto* sub = app.add_subcommand("verify-bounds",
                                       "quantization decomposition and risk bound table");
        auto delta = std::make_shared<double>(0.01);
        auto epsilon = std::make_shared<double>(0.02);
        auto trials = std::make_shared<int>(100000);
        sub->add_option("--delta", *delta, "quantization bin width")->capture_default_str();
        sub->add_option("--epsilon", *epsilon, "divergence budget")->capture_default_str();
        sub->add_option("--trials", *trials, "Monte-Carlo trials")->capture_default_str();
        sub->callback([&action, delta, epsilon, trials]() {
            action = [delta, epsilon, trials]() {
                QuantGrid fine(*delta);
                QuantGrid coarse(std::min(*delta * 10.0, 0.5));
                int gap_trials = std::min(*trials, 10000);
                auto fine_rep = measure_decomposition_gap(0.05, fine, gap_trials);
                auto coarse_rep = measure_decomposition_gap(0.05, coarse, gap_trials);
                auto risk = measure_risk_bounds(*epsilon, 1.0, fine, *trials);

                std::cout << "decomposition gap  delta=" << fine.delta
                          << "  mean_gap=" << fine_rep.mean_gap << "\n";
                std::cout << "decomposition gap  delta=" << coarse.delta
                          << "  mean_gap=" << coarse_rep.mean_gap << "\n";
                std::cout << "gap ratio (fine/coarse) = "
                          << (coarse_rep.mean_gap > 0 ? fine_rep.mean_gap / coarse_rep.mean_gap
                                                      : 0.0)
                          << "\n";
                std::cout << "risk  epsilon=" << *epsilon << "  delta=" << fine.delta << "\n";
                std::cout << "  R_cls=" << risk.r_cls << "  bound=" << risk.bound_cls
                          << (risk.r_cls <= risk.bound_cls ? "  ok" : "  VIOLATED") << "\n";
                std::cout << "  R_reg=" << risk.r_reg << "  bound=" << risk.bound_reg
                          << (risk.r_reg <= risk.bound_reg ? "  ok" : "  VIOLATED") << "\n";
                std::cout << "  mean_kl=" << risk.mean_kl << "\n";
                return (risk.r_cls <= risk.bound_cls && risk.r_reg <= risk.bound_reg) ? 0 : 1;
            };
        });
    }

    // ---- reward-serve ----
    {
        auto* sub = app.add_subcommand("reward-serve", "serve rewards over the line protocol");
        auto manifest_path = std::make_shared<std::string>();
        auto listen = std::make_shared<std::string>();
        auto stdio = std::make_shared<bool>(false);
        auto resolution = std::make_shared<int>(256);
        sub->add_option("--manifest", *manifest_path, "dataset manifest")->required();
        auto* listen_opt = sub->add_option("--listen", *listen, "host:port to bind");
        auto* stdio_opt = sub->add_flag("--stdio", *stdio, "serve over standard streams");
        listen_opt->excludes(stdio_opt);
        sub->add_option("--resolution", *resolution,
                        "square scoring resolution; 0 compares at native size")
            ->capture_default_str();
        sub->callback([&action, manifest_path, listen, stdio, resolution]() {
            action = [manifest_path, listen, stdio, resolution]() {
                ServerContext ctx = make_server_context(*manifest_path, *resolution);
                if (*stdio) {
                    serve_stream(ctx, std::cin, std::cout);
                    return 0;
                }
                if (listen->empty())
                    throw std::runtime_error("reward-serve needs --listen or --stdio");
                size_t colon = listen->rfind(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("--listen expects host:port");
                std::string host = listen->substr(0, colon);
                int port = std::stoi(listen->substr(colon + 1));
                TcpRewardServer server(ctx, host, port);
                std::cout << "listening on " << host << ":" << server.port() << "\n"
                          << std::flush;
                server.run();
                return 0;
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
