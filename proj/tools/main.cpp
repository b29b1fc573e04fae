#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "posefield/decoder.hpp"
#include "posefield/encoder.hpp"
#include "posefield/eval.hpp"
#include "posefield/fields.hpp"
#include "posefield/json_io.hpp"
#include "posefield/losses.hpp"
#include "posefield/render.hpp"
#include "posefield/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace posefield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitFloor = 3;

struct Options {
  int stride = 8;
  int hr_stride = 2;
  double seed_threshold = 0.5;
  double keypoint_threshold = 0.1;
  bool use_b_in_decoder = true;
  std::string loss = "laplace";
  double k_smooth = 1.0;
  int max_poses = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool ci = false;
  bool seed_given = false;

  DecoderConfig decoder() const {
    DecoderConfig c;
    c.seed_threshold = seed_threshold;
    c.keypoint_threshold = keypoint_threshold;
    c.use_b_in_decoder = use_b_in_decoder;
    c.max_poses = max_poses;
    c.fusion.hr_stride = hr_stride;
    return c;
  }

  LossConfig loss_config() const {
    LossConfig c;
    if (loss == "l1") c.regression = RegressionKind::vanilla_l1;
    else if (loss == "smoothl1") c.regression = RegressionKind::smooth_l1;
    else c.regression = RegressionKind::laplace;
    c.k_smooth = k_smooth;
    return c;
  }
};

void require_seed_in_ci(const Options& opt) {
  if (opt.ci && !opt.seed_given) {
    throw CLI::ValidationError("--ci requires an explicit --seed");
  }
}

template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int n_workers = std::min(jobs, n);
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// encode

struct EncodeArgs {
  std::vector<std::string> scene_files;
  std::string output;
};

int run_encode(const Options& opt, const EncodeArgs& args) {
  const SkeletonSpec skeleton = build_coco_skeleton();
  for (const auto& file : args.scene_files) {
    if (!fs::exists(file)) {
      std::cerr << "error: no such file: " << file << "\n";
      return kExitIo;
    }
    const auto scenes = scenes_from_json(read_text_file(file));
    for (size_t si = 0; si < scenes.size(); ++si) {
      const Scene& scene = scenes[si];
      validate(scene);
      const auto geometry =
          FieldGeometry::for_scene(scene.width, scene.height, opt.stride);
      const auto [pif, paf] = encode(scene, skeleton, geometry);

      fs::path out;
      if (!args.output.empty() && args.scene_files.size() == 1 &&
          scenes.size() == 1 && !fs::is_directory(args.output)) {
        out = args.output;
      } else {
        const fs::path dir =
            args.output.empty() ? fs::path(".") : fs::path(args.output);
        std::string stem = fs::path(file).stem().string();
        if (scenes.size() > 1) stem += "_" + std::to_string(si);
        out = dir / (stem + ".fields");
      }
      write_fields(out, pif, paf);
      std::cout << out.string() << "\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// decode

struct DecodeArgs {
  std::vector<std::string> field_files;
  std::string output;
};

int run_decode(const Options& opt, const DecodeArgs& args) {
  const SkeletonSpec skeleton = build_coco_skeleton();
  const DecoderConfig config = opt.decoder();

  std::vector<std::vector<DecodedPose>> results(args.field_files.size());
  for (size_t i = 0; i < args.field_files.size(); ++i) {
    if (!fs::exists(args.field_files[i])) {
      std::cerr << "error: no such file: " << args.field_files[i] << "\n";
      return kExitIo;
    }
  }
  parallel_for(static_cast<int>(args.field_files.size()), opt.jobs, [&](int i) {
    const auto [pif, paf] = read_fields(args.field_files[i]);
    results[i] = decode(pif, paf, skeleton, config);
  });

  const std::string text = results_to_json(results);
  if (args.output.empty()) {
    std::cout << text << "\n";
  } else {
    write_text_file(args.output, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// roundtrip

struct RoundtripArgs {
  int n_scenes = 20;
  int poses_min = 1;
  int poses_max = 5;
  double height_min = 40.0;
  double height_max = 200.0;
  double max_iou = 0.0;
  int width = 640;
  int height = 480;
  double noise_confidence = 0.0;
  double noise_vector = 0.0;
  double noise_dropout = 0.0;
  bool noise_heteroscedastic = false;
  double min_ap = 0.0;
  double min_recall = 0.0;
  double min_mean_oks = 0.0;
  std::string output;
};

int run_roundtrip(const Options& opt, const RoundtripArgs& args) {
  require_seed_in_ci(opt);
  const SkeletonSpec skeleton = build_coco_skeleton();
  const DecoderConfig config = opt.decoder();

  SceneParams params;
  params.min_poses = args.poses_min;
  params.max_poses = args.poses_max;
  params.min_height = args.height_min;
  params.max_height = args.height_max;
  params.max_pairwise_iou = args.max_iou;
  params.width = args.width;
  params.height = args.height;

  const auto t0 = std::chrono::steady_clock::now();
  const auto scenes = generate_scenes(opt.seed, args.n_scenes, params, skeleton);

  NoiseParams noise;
  noise.confidence_sigma = args.noise_confidence;
  noise.vector_sigma = args.noise_vector;
  noise.dropout = args.noise_dropout;
  noise.heteroscedastic = args.noise_heteroscedastic;
  const bool noisy = noise.confidence_sigma > 0 || noise.vector_sigma > 0 ||
                     noise.dropout > 0;

  std::vector<std::vector<DecodedPose>> preds(scenes.size());
  std::vector<LossBreakdown> losses(scenes.size());
  parallel_for(static_cast<int>(scenes.size()), opt.jobs, [&](int i) {
    const auto geometry =
        FieldGeometry::for_scene(scenes[i].width, scenes[i].height, opt.stride);
    const auto [pif, paf] = encode(scenes[i], skeleton, geometry);
    if (noisy) {
      const auto [npif, npaf] =
          perturb_fields(pif, paf, noise, opt.seed ^ (0x9E37ULL + i));
      losses[i] = composite_loss(npif, npaf, pif, paf, opt.loss_config());
      preds[i] = decode(npif, npaf, skeleton, config);
    } else {
      losses[i] = composite_loss(pif, paf, pif, paf, opt.loss_config());
      preds[i] = decode(pif, paf, skeleton, config);
    }
  });
  const auto t1 = std::chrono::steady_clock::now();

  const Metrics metrics = evaluate(preds, scenes, skeleton);
  const MatchStats at50 = match_at_oks(preds, scenes, skeleton, 0.50);
  const MatchStats at75 = match_at_oks(preds, scenes, skeleton, 0.75);

  // PCK against the best-OKS prediction per ground truth
  double pck_sum = 0.0;
  int pck_n = 0;
  for (size_t s = 0; s < scenes.size(); ++s) {
    for (const Pose& gt : scenes[s].poses) {
      ++pck_n;
      double best_oks = -1.0;
      const DecodedPose* best = nullptr;
      for (const DecodedPose& p : preds[s]) {
        const double v = oks(p, gt, skeleton);
        if (v > best_oks) {
          best_oks = v;
          best = &p;
        }
      }
      if (best) pck_sum += pck(*best, gt, 0.1);
    }
  }
  double loss_total = 0.0;
  for (const auto& l : losses) loss_total += l.total;

  json report;
  report["n_scenes"] = static_cast<int>(scenes.size());
  report["n_poses"] = at50.n_gt;
  report["AP"] = metrics.ap;
  report["AP50"] = metrics.ap50;
  report["AP75"] = metrics.ap75;
  report["AR"] = metrics.ar;
  report["recall_oks50"] = at50.recall();
  report["recall_oks75"] = at75.recall();
  report["mean_oks"] = at50.mean_oks();
  report["mean_pck01"] = pck_n > 0 ? pck_sum / pck_n : 0.0;
  report["loss_total"] = loss_total / std::max<size_t>(1, losses.size());
  report["loss_mode"] = opt.loss;
  report["seed"] = opt.seed;

  std::cout << "roundtrip: scenes=" << scenes.size() << " poses=" << at50.n_gt
            << "\n";
  std::cout << "  AP=" << format_double(metrics.ap)
            << " AP75=" << format_double(metrics.ap75)
            << " AR=" << format_double(metrics.ar) << "\n";
  std::cout << "  recall@0.50=" << format_double(at50.recall())
            << " recall@0.75=" << format_double(at75.recall())
            << " mean_oks=" << format_double(at50.mean_oks())
            << " pck@0.1=" << format_double(report["mean_pck01"].get<double>())
            << "\n";
  std::cout << "  loss[" << opt.loss
            << "]=" << format_double(report["loss_total"].get<double>())
            << "\n";
  // timing is reported on stderr so stdout stays bit-stable per seed
  std::cerr << "elapsed_ms="
            << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
                   .count()
            << "\n";

  if (!args.output.empty()) write_text_file(args.output, report.dump(2));

  if (metrics.ap < args.min_ap || at50.recall() < args.min_recall ||
      at50.mean_oks() < args.min_mean_oks) {
    std::cerr << "floor check failed\n";
    return kExitFloor;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string gt_file;
  std::string pred_file;
  std::string output;
};

int run_evaluate(const EvaluateArgs& args) {
  for (const auto& f : {args.gt_file, args.pred_file}) {
    if (!fs::exists(f)) {
      std::cerr << "error: no such file: " << f << "\n";
      return kExitIo;
    }
  }
  const SkeletonSpec skeleton = build_coco_skeleton();
  const auto gts = scenes_from_json(read_text_file(args.gt_file));
  const auto preds = results_from_json(read_text_file(args.pred_file));
  const Metrics metrics = evaluate(preds, gts, skeleton);
  const std::string text = metrics_to_json(metrics);
  if (args.output.empty()) {
    std::cout << text << "\n";
  } else {
    write_text_file(args.output, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  int width = 544;
  int height = 544;
  int poses = 5;
  int n_images = 10;
  int scale_steps = 2;
  std::string output;
};

struct BenchSample {
  int grid_w, grid_h;
  double mean_ms = 0, median_ms = 0, p95_ms = 0;
  double pif_cells = 0, paf_cells = 0;
};

int run_bench(const Options& opt, const BenchArgs& args) {
  require_seed_in_ci(opt);
  const SkeletonSpec skeleton = build_coco_skeleton();
  const DecoderConfig config = opt.decoder();

  json report;
  report["n_images"] = args.n_images;
  report["poses"] = args.poses;
  json sizes = json::array();

  for (int step = 0; step < args.scale_steps; ++step) {
    const double factor = std::pow(std::sqrt(2.0), step);
    SceneParams params;
    params.min_poses = args.poses;
    params.max_poses = args.poses;
    params.width = static_cast<int>(args.width * factor);
    params.height = static_cast<int>(args.height * factor);
    params.min_height = 60;
    params.max_height = 160;
    params.max_pairwise_iou = 0.1;

    const auto scenes =
        generate_scenes(opt.seed + step, args.n_images, params, skeleton);
    std::vector<double> times_ms;
    double pif_cells = 0, paf_cells = 0;
    for (const Scene& scene : scenes) {
      const auto geometry =
          FieldGeometry::for_scene(scene.width, scene.height, opt.stride);
      const auto [pif, paf] = encode(scene, skeleton, geometry);
      DecodeStats stats;
      const auto t0 = std::chrono::steady_clock::now();
      const auto poses = decode(pif, paf, skeleton, config, &stats);
      const auto t1 = std::chrono::steady_clock::now();
      (void)poses;
      times_ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
      pif_cells += static_cast<double>(stats.pif_cells_active);
      paf_cells += static_cast<double>(stats.paf_cells_active);
    }
    std::sort(times_ms.begin(), times_ms.end());
    BenchSample sample;
    sample.grid_w = (params.width + opt.stride - 1) / opt.stride;
    sample.grid_h = (params.height + opt.stride - 1) / opt.stride;
    double sum = 0;
    for (double t : times_ms) sum += t;
    sample.mean_ms = sum / times_ms.size();
    sample.median_ms = times_ms[times_ms.size() / 2];
    sample.p95_ms = times_ms[static_cast<size_t>(0.95 * (times_ms.size() - 1))];
    sample.pif_cells = pif_cells / scenes.size();
    sample.paf_cells = paf_cells / scenes.size();

    json entry;
    entry["grid_w"] = sample.grid_w;
    entry["grid_h"] = sample.grid_h;
    entry["decode_ms_mean"] = sample.mean_ms;
    entry["decode_ms_median"] = sample.median_ms;
    entry["decode_ms_p95"] = sample.p95_ms;
    entry["pif_cells_active_mean"] = sample.pif_cells;
    entry["paf_cells_active_mean"] = sample.paf_cells;
    sizes.push_back(entry);

    std::cout << "bench grid " << sample.grid_w << "x" << sample.grid_h
              << ": mean=" << format_double(sample.mean_ms)
              << "ms median=" << format_double(sample.median_ms)
              << "ms p95=" << format_double(sample.p95_ms) << "ms"
              << " pif_cells=" << sample.pif_cells
              << " paf_cells=" << sample.paf_cells << "\n";
  }
  report["sizes"] = std::move(sizes);
  if (!args.output.empty()) write_text_file(args.output, report.dump(2));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
  std::string input;
  std::string output = "out.svg";
  int width = 0;
  int height = 0;
  int index = 0;
};

int run_render(const RenderArgs& args) {
  if (!fs::exists(args.input)) {
    std::cerr << "error: no such file: " << args.input << "\n";
    return kExitIo;
  }
  const SkeletonSpec skeleton = build_coco_skeleton();
  const std::string text = read_text_file(args.input);
  const json j = json::parse(text);

  std::vector<DecodedPose> poses;
  int width = args.width;
  int height = args.height;
  const bool is_scene_file =
      j.contains("width") ||
      (j.contains("scenes") && !j["scenes"].empty() &&
       j["scenes"][0].contains("width"));
  if (is_scene_file) {
    const auto scenes = scenes_from_json(text);
    if (args.index < 0 || args.index >= static_cast<int>(scenes.size())) {
      std::cerr << "error: scene index out of range\n";
      return kExitValidation;
    }
    poses = poses_from_scene(scenes[args.index]);
    if (width == 0) width = scenes[args.index].width;
    if (height == 0) height = scenes[args.index].height;
  } else {
    const auto results = results_from_json(text);
    if (args.index < 0 || args.index >= static_cast<int>(results.size())) {
      std::cerr << "error: results index out of range\n";
      return kExitValidation;
    }
    poses = results[args.index];
    if (width == 0 || height == 0) {
      double max_x = 1, max_y = 1;
      for (const auto& p : poses) {
        for (const auto& joint : p.joints) {
          if (!joint.present) continue;
          max_x = std::max(max_x, joint.x);
          max_y = std::max(max_y, joint.y);
        }
      }
      if (width == 0) width = static_cast<int>(max_x) + 16;
      if (height == 0) height = static_cast<int>(max_y) + 16;
    }
  }
  write_text_file(args.output, render_svg(poses, skeleton, width, height));
  std::cout << args.output << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composite field codec and greedy pose decoder"};
  app.fallthrough();

  Options opt;
  app.set_config("--config", "", "flat key=value config file");
  app.add_option("--stride", opt.stride, "image px per field cell")
      ->capture_default_str();
  app.add_option("--hr-stride", opt.hr_stride,
                 "image px per fused-map raster cell")
      ->capture_default_str();
  app.add_option("--seed-threshold", opt.seed_threshold,
                 "minimum fused confidence to start a pose")
      ->capture_default_str();
  app.add_option("--keypoint-threshold", opt.keypoint_threshold,
                 "minimum joint confidence to keep a joint")
      ->capture_default_str();
  app.add_flag("--use-b-in-decoder,!--no-use-b-in-decoder",
               opt.use_b_in_decoder,
               "calibrate association distances with the predicted spread")
      ->capture_default_str();
  app.add_option("--loss", opt.loss, "regression loss: l1|smoothl1|laplace")
      ->check(CLI::IsMember({"l1", "smoothl1", "laplace"}))
      ->capture_default_str();
  app.add_option("--k-smooth", opt.k_smooth, "smooth-l1 radius factor")
      ->capture_default_str();
  app.add_option("--max-poses", opt.max_poses, "maximum poses per image")
      ->capture_default_str();
  auto* seed_opt =
      app.add_option("--seed", opt.seed, "rng seed")->capture_default_str();
  app.add_option("--jobs", opt.jobs, "parallel workers for batch commands")
      ->capture_default_str();
  app.add_flag("--ci", opt.ci, "require an explicit --seed for randomized commands");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config,
               "print the effective configuration and exit");

  EncodeArgs encode_args;
  auto* cmd_encode = app.add_subcommand("encode", "scene JSON -> .fields");
  cmd_encode->add_option("scenes", encode_args.scene_files, "scene JSON files")
      ->expected(-1);
  cmd_encode->add_option("-o,--output", encode_args.output,
                         "output file (single scene) or directory");

  DecodeArgs decode_args;
  auto* cmd_decode = app.add_subcommand("decode", ".fields -> results JSON");
  cmd_decode->add_option("fields", decode_args.field_files, ".fields files")
      ->expected(-1);
  cmd_decode->add_option("-o,--output", decode_args.output, "results JSON path");

  RoundtripArgs rt;
  auto* cmd_roundtrip = app.add_subcommand(
      "roundtrip", "generate -> encode -> (perturb) -> decode -> evaluate");
  cmd_roundtrip->add_option("--n-scenes", rt.n_scenes)->capture_default_str();
  cmd_roundtrip->add_option("--poses-min", rt.poses_min)->capture_default_str();
  cmd_roundtrip->add_option("--poses-max", rt.poses_max)->capture_default_str();
  cmd_roundtrip->add_option("--height-min", rt.height_min)->capture_default_str();
  cmd_roundtrip->add_option("--height-max", rt.height_max)->capture_default_str();
  cmd_roundtrip->add_option("--max-iou", rt.max_iou)->capture_default_str();
  cmd_roundtrip->add_option("--width", rt.width)->capture_default_str();
  cmd_roundtrip->add_option("--height", rt.height)->capture_default_str();
  cmd_roundtrip->add_option("--noise-confidence", rt.noise_confidence)
      ->capture_default_str();
  cmd_roundtrip->add_option("--noise-vector", rt.noise_vector)
      ->capture_default_str();
  cmd_roundtrip->add_option("--noise-dropout", rt.noise_dropout)
      ->capture_default_str();
  cmd_roundtrip->add_flag("--noise-heteroscedastic", rt.noise_heteroscedastic);
  cmd_roundtrip->add_option("--min-ap", rt.min_ap)->capture_default_str();
  cmd_roundtrip->add_option("--min-recall", rt.min_recall)->capture_default_str();
  cmd_roundtrip->add_option("--min-mean-oks", rt.min_mean_oks)
      ->capture_default_str();
  cmd_roundtrip->add_option("-o,--output", rt.output, "report JSON path");

  EvaluateArgs eval_args;
  auto* cmd_evaluate =
      app.add_subcommand("evaluate", "scenes + results -> metrics JSON");
  cmd_evaluate->add_option("--gt", eval_args.gt_file, "ground truth scenes JSON")
      ->required();
  cmd_evaluate->add_option("--pred", eval_args.pred_file, "results JSON")
      ->required();
  cmd_evaluate->add_option("-o,--output", eval_args.output, "metrics JSON path");

  BenchArgs bench_args;
  auto* cmd_bench = app.add_subcommand("bench", "decode timing harness");
  cmd_bench->add_option("--width", bench_args.width)->capture_default_str();
  cmd_bench->add_option("--height", bench_args.height)->capture_default_str();
  cmd_bench->add_option("--poses", bench_args.poses)->capture_default_str();
  cmd_bench->add_option("--n-images", bench_args.n_images)->capture_default_str();
  cmd_bench->add_option("--scale-steps", bench_args.scale_steps)
      ->capture_default_str();
  cmd_bench->add_option("-o,--output", bench_args.output, "report JSON path");

  RenderArgs render_args;
  auto* cmd_render = app.add_subcommand("render", "scene or results -> SVG");
  cmd_render->add_option("input", render_args.input, "scene or results JSON")
      ->required();
  cmd_render->add_option("-o,--output", render_args.output, "SVG path")
      ->capture_default_str();
  cmd_render->add_option("--width", render_args.width)->capture_default_str();
  cmd_render->add_option("--height", render_args.height)->capture_default_str();
  cmd_render->add_option("--index", render_args.index)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  opt.seed_given = seed_opt->count() > 0;

  try {
    if (dump_config) {
      std::cout << "stride=" << opt.stride << "\n"
                << "hr-stride=" << opt.hr_stride << "\n"
                << "seed-threshold=" << opt.seed_threshold << "\n"
                << "keypoint-threshold=" << opt.keypoint_threshold << "\n"
                << "use-b-in-decoder=" << (opt.use_b_in_decoder ? 1 : 0)
                << "\n"
                << "loss=" << opt.loss << "\n"
                << "k-smooth=" << opt.k_smooth << "\n"
                << "max-poses=" << opt.max_poses << "\n"
                << "seed=" << opt.seed << "\n"
                << "jobs=" << opt.jobs << "\n";
      return kExitOk;
    }
    if (cmd_encode->parsed()) return run_encode(opt, encode_args);
    if (cmd_decode->parsed()) return run_decode(opt, decode_args);
    if (cmd_roundtrip->parsed()) return run_roundtrip(opt, rt);
    if (cmd_evaluate->parsed()) return run_evaluate(eval_args);
    if (cmd_bench->parsed()) return run_bench(opt, bench_args);
    if (cmd_render->parsed()) return run_render(render_args);
    std::cerr << app.help();
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FieldIoError& e) {
    std::cerr << "field io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
