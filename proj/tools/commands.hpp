#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <optional>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "symmetria/symmetria.hpp"

namespace symmetria::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoPlanes = 2;

/// Misuse of the command line (reported like a parse error, exit 1).
struct UsageError : Error {
  using Error::Error;
};

inline std::string sha256_file(const fs::path& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed for " + path.string());
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Everything needed to rerun a command: argv, configuration, input hashes.
/// Timestamps live here and nowhere else, so reports stay byte-stable.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv)
      : start_(std::chrono::steady_clock::now()) {
    j_["tool_version"] = kVersion;
    j_["command"] = std::move(command);
    j_["argv"] = std::move(argv);
    j_["started_utc"] = utc_now();
    j_["inputs"] = ojson::array();
    j_["outputs"] = ojson::array();
  }

  void input(const fs::path& p) {
    j_["inputs"].push_back({{"path", p.string()}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  ojson& operator[](const char* key) { return j_[key]; }

  void write(const fs::path& path, int exit_code) {
    j_["finished_utc"] = utc_now();
    j_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j_["exit_code"] = exit_code;
    write_text(path, j_.dump(2) + "\n");
  }

 private:
  ojson j_;
  std::chrono::steady_clock::time_point start_;
};

inline std::vector<std::string> parse_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> parse_thresholds(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : parse_list(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || !(v > 0.0)) throw UsageError("invalid threshold '" + t + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("no thresholds given");
  return out;
}

/// Runs `work(i)` for i in [0, n) on up to `jobs` threads. Each index writes
/// only its own slot, so results do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& work) {
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) work(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  std::string mesh;
  std::string out;
  std::string backend = "proxy";
  std::string sampling = "fibonacci";
  std::string features;
  DetectConfig cfg;
  bool reflected_ply = false;
  bool save_model = false;
  int retries = 0;
  bool quiet = false;
};

/// Detection with optional reseeding after a numeric failure.
/// On return `cfg.seed` holds the seed that succeeded.
inline Detection detect_with_retries(const fs::path& mesh, DetectConfig& cfg, int retries, std::ostream* log) {
  for (int attempt = 0;; ++attempt) {
    try {
      return detect(mesh, cfg);
    } catch (const NumericError& e) {
      if (attempt >= retries) throw;
      if (log) *log << "warning: " << e.what() << "; retrying with seed " << cfg.seed + 1 << "\n";
      ++cfg.seed;
    }
  }
}

inline void finalize_detect_config(DetectArgs& a) {
  a.cfg.backend = parse_backend(a.backend);
  a.cfg.views.sampling = parse_view_sampling(a.sampling);
  if (a.cfg.backend == FeatureBackend::kExternal && a.features.empty())
    throw UsageError("--backend external requires --features <file.symfeat>");
  a.cfg.features_path = a.features;
  try {
    a.cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

inline int cmd_detect(DetectArgs a, const std::vector<std::string>& argv) {
  finalize_detect_config(a);
  const fs::path mesh = a.mesh;
  const fs::path out = a.out.empty() ? fs::path(mesh.stem().string() + "_symmetry") : fs::path(a.out);
  fs::create_directories(out);
  RunManifest manifest("detect", argv);
  manifest.input(mesh);
  if (a.cfg.backend == FeatureBackend::kExternal && fs::exists(a.cfg.features_path)) manifest.input(a.cfg.features_path);

  const Detection d = detect_with_retries(mesh, a.cfg, a.retries, &std::cerr);
  const ojson report = result_json(a.mesh, a.cfg, d);
  write_text(out / "result.json", report.dump(2) + "\n");
  manifest.output(out / "result.json");
  write_text(out / "loss.csv", loss_csv(d.result.loss_history));
  manifest.output(out / "loss.csv");
  if (a.reflected_ply) {
    for (const auto& p : d.result.planes) {
      PointCloud mirrored = reflect_points(PointCloud{d.object.source.points}, p.normal);
      for (auto& x : mirrored.points) x = d.result.normalization.to_original(x);
      const fs::path f = out / ("reflected_head" + std::to_string(p.head) + ".ply");
      write_text(f, ply_points(mirrored.points));
      manifest.output(f);
    }
  }
  if (a.save_model) {
    save_model(d.model.params, out / "model.symw");
    manifest.output(out / "model.symw");
  }
  for (const auto& w : d.result.warnings) std::cerr << "warning: " << w << "\n";
  if (!a.quiet) {
    std::cout << a.mesh << ": " << d.result.planes.size() << " plane(s)\n";
    for (const auto& p : d.result.planes) {
      std::printf("  head %zu normal (%.6f, %.6f, %.6f) chamfer %.3g\n", p.head, p.normal_original.x(),
                  p.normal_original.y(), p.normal_original.z(), p.plain_residual);
    }
  }
  const int code = d.result.planes.empty() ? kExitNoPlanes : kExitOk;
  manifest["seed"] = a.cfg.seed;
  manifest["config"] = config_json(a.cfg);
  manifest["detection_seconds"] = d.result.seconds;
  manifest.write(out / "run_manifest.json", code);
  return code;
}

// ---------------------------------------------------------- render-views

struct RenderArgs {
  std::string mesh;
  std::string out;
  std::string sampling = "fibonacci";
  ViewConfig views;
};

inline int cmd_render_views(RenderArgs a) {
  a.views.sampling = parse_view_sampling(a.sampling);
  if (a.views.count < 1) throw UsageError("--views must be >= 1");
  if (a.out.empty()) throw UsageError("--out is required");
  Diagnostics diag;
  const TriangleMesh mesh = load_mesh(a.mesh, &diag);
  const auto [normalized, norm] = normalize_object(mesh);
  const ojson manifest = write_view_bundle(normalized, a.views, a.out);
  for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << manifest["views"].size() << " views to " << a.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out = "eval_report";
  std::string meshes;
  std::string thresholds = "0.05,0.1,0.15,0.2";
  std::string matching = "existence";
  std::size_t sde_samples = 1000;
  std::uint64_t seed = 0;
};

inline Matching parse_matching(const std::string& s) {
  if (s == "existence") return Matching::kExistence;
  if (s == "one-to-one") return Matching::kOneToOne;
  throw UsageError("unknown matching '" + s + "' (expected existence|one-to-one)");
}

struct EvalSummary {
  std::vector<ObjectEval> objects;
  std::vector<double> thresholds;
  std::vector<double> mean_f_per_threshold;
  double mean_f = 0.0;
  double mean_sde = std::numeric_limits<double>::quiet_NaN();  // over all predicted planes
  std::size_t sde_planes = 0;
  std::vector<double> angular_errors;  // one per (object, ground-truth plane)
};

inline EvalSummary summarize(std::vector<ObjectEval> objects, const std::vector<double>& thresholds) {
  EvalSummary s;
  s.objects = std::move(objects);
  s.thresholds = thresholds;
  s.mean_f_per_threshold.assign(thresholds.size(), 0.0);
  double sde_sum = 0.0;
  for (const auto& o : s.objects) {
    for (std::size_t t = 0; t < thresholds.size(); ++t) s.mean_f_per_threshold[t] += o.f.per_threshold[t].f;
    s.mean_f += o.f.mean_f;
    for (double v : o.sde) sde_sum += v;
    s.sde_planes += o.sde.size();
    s.angular_errors.insert(s.angular_errors.end(), o.angular_errors.begin(), o.angular_errors.end());
  }
  if (!s.objects.empty()) {
    const auto n = static_cast<double>(s.objects.size());
    for (auto& f : s.mean_f_per_threshold) f /= n;
    s.mean_f /= n;
  }
  if (s.sde_planes > 0) s.mean_sde = sde_sum / static_cast<double>(s.sde_planes);
  return s;
}

inline ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson summary_json(const EvalSummary& s) {
  ojson j;
  j["objects"] = ojson::array();
  for (const auto& o : s.objects) {
    ojson per;
    per["name"] = o.name;
    per["predicted"] = o.predicted;
    per["ground_truth"] = o.truth;
    per["sde"] = o.sde;
    per["mean_sde"] = number_or_null(o.mean_sde());
    per["f_score"] = o.f.mean_f;
    per["per_threshold"] = ojson::array();
    for (const auto& t : o.f.per_threshold)
      per["per_threshold"].push_back({{"threshold", t.threshold}, {"tp", t.tp}, {"fp", t.fp}, {"fn", t.fn},
                                      {"precision", t.precision}, {"recall", t.recall}, {"f", t.f}});
    per["angular_errors_deg"] = ojson::array();
    for (double e : o.angular_errors) per["angular_errors_deg"].push_back(number_or_null(e));
    j["objects"].push_back(per);
  }
  j["aggregate"] = {{"objects", s.objects.size()},
                    {"f_score", s.mean_f},
                    {"f_score_per_threshold", s.mean_f_per_threshold},
                    {"thresholds", s.thresholds},
                    {"mean_sde", number_or_null(s.mean_sde)},
                    {"sde_planes", s.sde_planes}};
  return j;
}

inline std::string curve_csv(const std::vector<double>& errors, double hi) {
  const auto th = threshold_sweep(0.0, hi, 101);
  const auto ratio = angular_error_curve(errors, th);
  std::string out = "threshold_deg,ratio\n";
  char buf[64];
  for (std::size_t i = 0; i < th.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.4f,%.6f\n", th[i], ratio[i]);
    out += buf;
  }
  return out;
}

inline void write_eval_outputs(const EvalSummary& s, const fs::path& out) {
  fs::create_directories(out);
  write_text(out / "eval.json", summary_json(s).dump(2) + "\n");
  std::string f = "threshold,mean_f\n";
  char buf[96];
  for (std::size_t t = 0; t < s.thresholds.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%g,%.6f\n", s.thresholds[t], s.mean_f_per_threshold[t]);
    f += buf;
  }
  write_text(out / "fscore.csv", f);
  std::string objs = "name,predicted,ground_truth,mean_sde,f_score\n";
  for (const auto& o : s.objects) {
    std::snprintf(buf, sizeof buf, ",%zu,%zu,%.9g,%.6f\n", o.predicted, o.truth, o.mean_sde(), o.f.mean_f);
    objs += o.name + buf;
  }
  write_text(out / "objects.csv", objs);
  write_text(out / "angular_curve_1deg.csv", curve_csv(s.angular_errors, 1.0));
  write_text(out / "angular_curve_5deg.csv", curve_csv(s.angular_errors, 5.0));
}

inline std::vector<fs::path> find_results(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw Error("prediction directory not found: " + dir.string());
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "result.json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline int cmd_eval(EvalArgs a, const std::vector<std::string>& argv) {
  EvalOptions opt;
  opt.thresholds = parse_thresholds(a.thresholds);
  opt.matching = parse_matching(a.matching);
  opt.sde_samples = a.sde_samples;
  opt.seed = a.seed;
  RunManifest manifest("eval", argv);
  manifest.input(a.gt);
  const auto gt = parse_ground_truth(read_text(a.gt));
  const auto files = find_results(a.pred);
  if (files.empty()) {
    std::cerr << "error: no result.json files under " << a.pred << "\n";
    return kExitError;
  }
  std::vector<ObjectEval> evals;
  std::vector<std::string> skipped;
  std::set<std::string> seen;
  for (const auto& f : files) {
    const StoredResult r = parse_result(read_text(f));
    const std::string name = fs::path(r.mesh).stem().string();
    if (!seen.insert(name).second) throw Error("duplicate results for object '" + name + "'");
    const auto it = gt.find(name);
    if (it == gt.end()) {
      skipped.push_back(name + ": no ground truth");
      continue;
    }
    const fs::path mesh_path = a.meshes.empty() ? fs::path(r.mesh) : fs::path(a.meshes) / fs::path(r.mesh).filename();
    TriangleMesh normalized;
    try {
      normalized = normalize_object(load_mesh(mesh_path)).first;
    } catch (const Error& e) {
      skipped.push_back(name + ": " + e.what());
      continue;
    }
    manifest.input(f);
    evals.push_back(evaluate_object(name, normalized, r.normalization, r.normals, it->second, opt));
  }
  for (const auto& s : skipped) std::cerr << "skipped " << s << "\n";
  const EvalSummary s = summarize(std::move(evals), opt.thresholds);
  write_eval_outputs(s, a.out);
  std::printf("objects %zu  skipped %zu  F-score %.4f  mean SDE %.4g\n", s.objects.size(), skipped.size(), s.mean_f,
              s.mean_sde);
  const int code = s.objects.empty() ? kExitError : kExitOk;
  manifest["skipped"] = skipped;
  manifest.write(fs::path(a.out) / "run_manifest.json", code);
  return code;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  std::string mesh_dir;
  std::string gt;
  std::string out = "ablation_report";
  DetectConfig cfg;
  int jobs = 1;
  std::size_t sde_samples = 1000;
};

struct Variant {
  std::string name;
  FeatureBackend backend;
  ViewSampling sampling;
};

inline std::vector<fs::path> find_meshes(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("mesh directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".obj" || ext == ".ply" || ext == ".OBJ" || ext == ".PLY")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline fs::path external_features_for(const fs::path& mesh, ViewSampling s) {
  return mesh.parent_path() / (mesh.stem().string() + "." + (s == ViewSampling::kFibonacci ? "fibonacci" : "uniform") + ".symfeat");
}

inline int cmd_ablate(AblateArgs a, const std::vector<std::string>& argv) {
  try {
    a.cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto meshes = find_meshes(a.mesh_dir);
  if (meshes.empty()) {
    std::cerr << "error: no OBJ/PLY meshes in " << a.mesh_dir << "\n";
    return kExitError;
  }
  const auto gt = parse_ground_truth(read_text(a.gt));
  RunManifest manifest("ablate", argv);
  manifest.input(a.gt);
  for (const auto& m : meshes) manifest.input(m);

  std::vector<Variant> variants{{"No views (3D coords)", FeatureBackend::kNone, ViewSampling::kFibonacci},
                                {"Views (Uniform sampling)", FeatureBackend::kProxy, ViewSampling::kEquiangular},
                                {"Views (Fibonacci sampling)", FeatureBackend::kProxy, ViewSampling::kFibonacci}};
  for (auto s : {ViewSampling::kEquiangular, ViewSampling::kFibonacci}) {
    const bool any = std::any_of(meshes.begin(), meshes.end(), [&](const fs::path& m) { return fs::exists(external_features_for(m, s)); });
    if (any)
      variants.push_back({std::string("External features (") + (s == ViewSampling::kFibonacci ? "Fibonacci" : "Uniform") + " sampling)",
                          FeatureBackend::kExternal, s});
  }

  EvalOptions opt;
  opt.sde_samples = a.sde_samples;
  opt.seed = a.cfg.seed;
  ojson table = ojson::array();
  std::vector<std::string> failures;
  std::string csv = "variant,objects,failed,mean_sde,f_score\n";
  std::string md = "| Variant | Objects | SDE | F-score |\n|---|---|---|---|\n";
  for (const auto& v : variants) {
    std::vector<std::optional<ObjectEval>> slots(meshes.size());
    std::vector<std::string> errors(meshes.size());
    parallel_for(meshes.size(), a.jobs, [&](std::size_t i) {
      const std::string name = meshes[i].stem().string();
      try {
        const auto it = gt.find(name);
        if (it == gt.end()) throw Error("no ground truth");
        DetectConfig cfg = a.cfg;
        cfg.backend = v.backend;
        cfg.views.sampling = v.sampling;
        if (v.backend == FeatureBackend::kExternal) cfg.features_path = external_features_for(meshes[i], v.sampling);
        const Detection d = detect(meshes[i], cfg);
        std::vector<Vec3> normals;
        for (const auto& p : d.result.planes) normals.push_back(p.normal);
        slots[i] = evaluate_object(name, d.object.normalized, d.object.normalization, normals, it->second, opt);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    std::vector<ObjectEval> ok;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < meshes.size(); ++i) {
      if (slots[i]) {
        ok.push_back(*slots[i]);
      } else {
        ++failed;
        failures.push_back(v.name + " / " + meshes[i].filename().string() + ": " + errors[i]);
      }
    }
    const EvalSummary s = summarize(std::move(ok), opt.thresholds);
    ojson row = summary_json(s);
    row["variant"] = v.name;
    row["backend"] = to_string(v.backend);
    row["sampling"] = to_string(v.sampling);
    row["failed"] = failed;
    table.push_back(row);
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%zu,%zu,%.9g,%.6f\n", s.objects.size(), failed, s.mean_sde, s.mean_f);
    csv += "\"" + v.name + "\"" + buf;
    std::snprintf(buf, sizeof buf, " | %zu | %.3e | %.4f |\n", s.objects.size(), s.mean_sde, s.mean_f);
    md += "| " + v.name + buf;
  }
  fs::create_directories(a.out);
  ojson report;
  report["config"] = config_json(a.cfg);
  report["rows"] = table;
  report["failures"] = failures;
  write_text(fs::path(a.out) / "ablation.json", report.dump(2) + "\n");
  write_text(fs::path(a.out) / "table.csv", csv);
  write_text(fs::path(a.out) / "table.md", md);
  std::cout << md;
  for (const auto& f : failures) std::cerr << "failed " << f << "\n";
  manifest["config"] = config_json(a.cfg);
  manifest["seed"] = a.cfg.seed;
  manifest.write(fs::path(a.out) / "run_manifest.json", kExitOk);
  return kExitOk;
}

// ------------------------------------------------------------------ main

/// Applies a key=value config file to a subcommand. Values only fill options
/// that were not given on the command line or through the environment.
inline void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path);
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub->get_name()))
      throw UsageError("config key '" + item.fullname() + "' does not belong to '" + sub->get_name() + "'");
    if (item.name == "config") throw UsageError("config files cannot include other config files");
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw UsageError("unknown config key '" + item.name + "'");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key '" + item.name + "': " + e.what());
    }
  }
}

inline void add_detect_options(CLI::App* app, DetectConfig& cfg) {
  app->add_option("--seed", cfg.seed, "Random seed")->envname("SYMMETRIA_SEED");
  app->add_option("--iters", cfg.iterations, "Optimization iterations");
  app->add_option("--lr", cfg.learning_rate, "AdamW learning rate");
  app->add_option("--heads", cfg.heads, "Number of predicted planes");
  app->add_option("--filter", cfg.filter_threshold, "Plain Chamfer threshold for keeping a plane");
  app->add_option("--views", cfg.views.count, "Viewpoint count");
  app->add_option("--res", cfg.views.resolution, "Render resolution (pixels)");
  app->add_option("--lambda", cfg.feature_weight, "Weight of the feature term");
  app->add_option("--train-samples", cfg.train_samples, "Points drawn per iteration");
  app->add_option("--source-samples", cfg.source_samples, "Surface points sampled from the mesh");
  app->add_option("--merge-angle", cfg.merge_angle_deg, "Merge kept planes closer than this (degrees)");
}

inline int run(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"symmetria: self-prior reflective symmetry detection"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string config_path[4];

  DetectArgs det;
  auto* detect_cmd = app.add_subcommand("detect", "Detect symmetry planes of one mesh");
  detect_cmd->add_option("--config", config_path[0], "key=value configuration file (flags override it)");
  detect_cmd->add_option("mesh", det.mesh, "OBJ or PLY mesh")->required();
  detect_cmd->add_option("--out", det.out, "Output directory");
  detect_cmd->add_option("--backend", det.backend, "Feature backend: proxy|external|none");
  detect_cmd->add_option("--features", det.features, "SYMFEAT file for the external backend");
  detect_cmd->add_option("--sampling", det.sampling, "Viewpoint sampling: fibonacci|uniform");
  detect_cmd->add_flag("--reflected-ply", det.reflected_ply, "Write the reflected cloud of each kept plane");
  detect_cmd->add_flag("--save-model", det.save_model, "Write the optimized parameters (SYMW)");
  detect_cmd->add_option("--retries", det.retries, "Reseed and retry this many times after a numeric failure");
  detect_cmd->add_flag("--quiet", det.quiet, "No summary on stdout");
  add_detect_options(detect_cmd, det.cfg);

  RenderArgs ren;
  auto* render_cmd = app.add_subcommand("render-views", "Export a view bundle for an external feature extractor");
  render_cmd->add_option("--config", config_path[1], "key=value configuration file");
  render_cmd->add_option("mesh", ren.mesh, "OBJ or PLY mesh")->required();
  render_cmd->add_option("--out", ren.out, "Bundle directory")->required();
  render_cmd->add_option("--views", ren.views.count, "Viewpoint count");
  render_cmd->add_option("--res", ren.views.resolution, "Resolution (pixels)");
  render_cmd->add_option("--sampling", ren.sampling, "fibonacci|uniform");
  render_cmd->add_option("--distance", ren.views.distance, "Camera distance");
  render_cmd->add_option("--fov", ren.views.fov_y, "Vertical field of view (radians)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score detection results against ground truth");
  eval_cmd->add_option("--config", config_path[2], "key=value configuration file");
  eval_cmd->add_option("--pred", ev.pred, "Directory containing result.json files")->required();
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth plane JSON")->required();
  eval_cmd->add_option("--out", ev.out, "Report directory");
  eval_cmd->add_option("--meshes", ev.meshes, "Directory to resolve mesh files by name");
  eval_cmd->add_option("--thresholds", ev.thresholds, "Comma-separated plane distance thresholds");
  eval_cmd->add_option("--matching", ev.matching, "existence|one-to-one");
  eval_cmd->add_option("--sde-samples", ev.sde_samples, "Surface samples per SDE evaluation");
  eval_cmd->add_option("--seed", ev.seed, "Seed for SDE sampling")->envname("SYMMETRIA_SEED");

  AblateArgs abl;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare feature backends over a mesh directory");
  ablate_cmd->add_option("--config", config_path[3], "key=value configuration file");
  ablate_cmd->add_option("mesh_dir", abl.mesh_dir, "Directory of OBJ/PLY meshes")->required();
  ablate_cmd->add_option("--gt", abl.gt, "Ground-truth plane JSON")->required();
  ablate_cmd->add_option("--out", abl.out, "Report directory");
  ablate_cmd->add_option("--jobs", abl.jobs, "Objects processed in parallel");
  ablate_cmd->add_option("--sde-samples", abl.sde_samples, "Surface samples per SDE evaluation");
  add_detect_options(ablate_cmd, abl.cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    apply_config(detect_cmd, config_path[0]);
    apply_config(render_cmd, config_path[1]);
    apply_config(eval_cmd, config_path[2]);
    apply_config(ablate_cmd, config_path[3]);
    if (*detect_cmd) return cmd_detect(det, args);
    if (*render_cmd) return cmd_render_views(ren);
    if (*eval_cmd) return cmd_eval(ev, args);
    if (*ablate_cmd) return cmd_ablate(abl, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitError;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    const auto& trace = e.trace();
    if (!trace.empty()) {
      std::cerr << "loss trace:";
      for (double v : trace) std::cerr << ' ' << v;
      std::cerr << "\n";
    }
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace symmetria::cli
