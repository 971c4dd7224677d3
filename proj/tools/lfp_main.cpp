// Command-line front end: filter (delete detections with returns behind
// them), eval (40-position AP / HR-Precision), sweep (scale-ratio study) and
// synth (ray-cast synthetic KITTI frames).
//
// Exit codes: 0 success, 1 usage, 2 frame-id mismatch, 3 parse/format
// failure, 4 undefined recall (no ground truths), 5 I/O failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lfp/lfp.hpp"

namespace fs = std::filesystem;

namespace {

struct IdMismatch {
  std::string id;
  std::string missing_from;
};

std::vector<std::string> list_ids(const std::string& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw lfp::IoError("not a directory: " + dir);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void require_ids_present(const std::vector<std::string>& ids, const std::string& dir,
                         const std::string& ext, const std::string& what) {
  const std::vector<std::string> have = list_ids(dir, ext);
  const std::set<std::string> have_set(have.begin(), have.end());
  for (const std::string& id : ids) {
    if (!have_set.count(id)) throw IdMismatch{id, what};
  }
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw lfp::IoError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw lfp::IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Runs fn(0..n-1) on a bounded pool; per-index exceptions are rethrown after
/// the join, lowest index first, so failures are independent of worker count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, const Fn& fn) {
  if (n == 0) return;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

lfp::CadModel load_model(const std::string& cad_path) {
  if (cad_path.empty()) return lfp::default_cad_model();
  return lfp::downsample(lfp::canonicalize(lfp::load_cad(cad_path)));
}

/// Prediction rows must carry a score; everything else maps 1:1.
std::vector<lfp::Detection> to_detections(const std::vector<lfp::KittiLabel>& labels,
                                          const lfp::CalibrationSet& calib,
                                          const std::string& path) {
  std::vector<lfp::Detection> dets;
  dets.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].score) {
      throw lfp::ParseError(path, i + 1, "prediction row lacks the score field");
    }
    dets.push_back({lfp::camera_to_lidar_box(labels[i], calib), *labels[i].score,
                    labels[i].type});
  }
  return dets;
}

bool gt_ignored(const lfp::KittiLabel& label, lfp::Difficulty selected) {
  if (label.type != "Car") return true;
  return static_cast<int>(lfp::assign_difficulty(label)) > static_cast<int>(selected);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// ---------------------------------------------------------------------------
// filter
// ---------------------------------------------------------------------------

struct FilterConfig {
  std::string pred_dir, velo_dir, calib_dir, out_dir, cad_path;
  double kappa = lfp::kDefaultKappa;
  unsigned workers = std::thread::hardware_concurrency();
  bool diagnostics = false;
};

int run_filter(const FilterConfig& cfg) {
  const std::vector<std::string> ids = list_ids(cfg.pred_dir, ".txt");
  require_ids_present(ids, cfg.velo_dir, ".bin", cfg.velo_dir);
  require_ids_present(ids, cfg.calib_dir, ".txt", cfg.calib_dir);
  fs::create_directories(cfg.out_dir);
  const lfp::CadModel cad = load_model(cfg.cad_path);

  struct FrameResult {
    std::size_t total = 0, kept = 0;
    std::string removal_lines;
    std::string diagnostic_lines;
  };
  std::vector<FrameResult> results(ids.size());

  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    const std::string& id = ids[i];
    const std::string pred_path = (fs::path(cfg.pred_dir) / (id + ".txt")).string();
    const std::vector<lfp::KittiLabel> labels = lfp::parse_labels(pred_path);
    const lfp::CalibrationSet calib =
        lfp::parse_calib((fs::path(cfg.calib_dir) / (id + ".txt")).string());
    const lfp::VelodyneScan scan =
        lfp::parse_velodyne((fs::path(cfg.velo_dir) / (id + ".bin")).string());

    lfp::Frame frame;
    frame.id = id;
    frame.cloud = scan.points;
    frame.detections = to_detections(labels, calib, pred_path);

    lfp::FilterOptions options;
    options.kappa = cfg.kappa;
    const lfp::FilterOutcome outcome = lfp::filter_detections(frame, cad, options);

    std::string kept_text;
    for (std::size_t k : outcome.kept_indices) kept_text += lfp::format_label(labels[k]) + "\n";
    atomic_write(fs::path(cfg.out_dir) / (id + ".txt"), kept_text);

    FrameResult& res = results[i];
    res.total = frame.detections.size();
    res.kept = outcome.kept.size();
    for (const lfp::RemovedDetection& rem : outcome.removed) {
      const lfp::PenetratedPoint& ev = rem.evidence.front();
      const lfp::OrientedBox3& b = rem.detection.box;
      char line[256];
      std::snprintf(line, sizeof line,
                    "%s pred %zu score %.2f center (%.2f %.2f %.2f) size (%.2f %.2f %.2f) "
                    "yaw %.4f penetrated_by point %zu rho %.6f t %.6f cad %zu\n",
                    id.c_str(), rem.detection_index, rem.detection.score, b.center.x,
                    b.center.y, b.center.z, b.size.w, b.size.l, b.size.h, b.yaw,
                    ev.cloud_index, ev.polar.rho, ev.polar.t, ev.cad_index);
      res.removal_lines += line;
    }
    for (const lfp::BoxDiagnostic& diag : outcome.diagnostics) {
      res.diagnostic_lines += id + " pred " + std::to_string(diag.detection_index) + ": " +
                              diag.message + "\n";
    }
  });

  std::string log;
  std::size_t total = 0, kept = 0;
  for (const FrameResult& res : results) {
    total += res.total;
    kept += res.kept;
    log += res.removal_lines;
    if (cfg.diagnostics && !res.diagnostic_lines.empty()) std::cerr << res.diagnostic_lines;
  }
  atomic_write(fs::path(cfg.out_dir) / "removals.log", log);

  std::cout << "kappa: " << fmt("%.2f", cfg.kappa) << "\n"
            << "frames: " << ids.size() << "\n"
            << "detections: " << total << " kept: " << kept << " removed: " << (total - kept)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalConfig {
  std::string pred_dir, label_dir, calib_dir, out_dir, baseline_dir;
  lfp::Difficulty difficulty = lfp::Difficulty::kModerate;
  lfp::MetricKind metric = lfp::MetricKind::k3d;
  unsigned workers = std::thread::hardware_concurrency();
};

std::vector<lfp::EvalFrame> load_eval_frames(const std::vector<std::string>& ids,
                                             const std::string& pred_dir,
                                             const std::string& label_dir,
                                             const std::string& calib_dir,
                                             lfp::Difficulty difficulty, unsigned workers) {
  std::vector<lfp::EvalFrame> frames(ids.size());
  parallel_for(ids.size(), workers, [&](std::size_t i) {
    const std::string& id = ids[i];
    const lfp::CalibrationSet calib =
        lfp::parse_calib((fs::path(calib_dir) / (id + ".txt")).string());
    const std::string pred_path = (fs::path(pred_dir) / (id + ".txt")).string();
    frames[i].preds = to_detections(lfp::parse_labels(pred_path), calib, pred_path);
    for (const lfp::KittiLabel& gt :
         lfp::parse_labels((fs::path(label_dir) / (id + ".txt")).string())) {
      frames[i].gts.push_back(
          {lfp::camera_to_lidar_box(gt, calib), gt_ignored(gt, difficulty)});
    }
  });
  return frames;
}

void emit_report(const lfp::EvalReport& report, const std::string& out_dir,
                 const std::string& stem) {
  atomic_write(fs::path(out_dir) / (stem + ".txt"), lfp::report_to_text(report));
  atomic_write(fs::path(out_dir) / (stem + ".csv"), lfp::report_to_csv(report));
}

int run_eval(const EvalConfig& cfg) {
  const std::vector<std::string> ids = list_ids(cfg.label_dir, ".txt");
  require_ids_present(ids, cfg.pred_dir, ".txt", cfg.pred_dir);
  require_ids_present(list_ids(cfg.pred_dir, ".txt"), cfg.label_dir, ".txt", cfg.label_dir);
  require_ids_present(ids, cfg.calib_dir, ".txt", cfg.calib_dir);
  fs::create_directories(cfg.out_dir);

  const std::string stem =
      std::string("report_") + lfp::metric_name(cfg.metric) + "_" +
      lfp::difficulty_name(cfg.difficulty);
  std::cout << "# eval settings: metric=" << lfp::metric_name(cfg.metric)
            << " difficulty=" << lfp::difficulty_name(cfg.difficulty)
            << " iou_threshold=" << fmt("%.2f", lfp::kIouThreshold) << "\n";

  const lfp::EvalReport report = lfp::evaluate_frames(
      load_eval_frames(ids, cfg.pred_dir, cfg.label_dir, cfg.calib_dir, cfg.difficulty,
                       cfg.workers),
      cfg.difficulty, cfg.metric);
  emit_report(report, cfg.out_dir, stem);
  std::cout << lfp::report_to_text(report);

  if (!cfg.baseline_dir.empty()) {
    require_ids_present(ids, cfg.baseline_dir, ".txt", cfg.baseline_dir);
    const lfp::EvalReport baseline = lfp::evaluate_frames(
        load_eval_frames(ids, cfg.baseline_dir, cfg.label_dir, cfg.calib_dir, cfg.difficulty,
                         cfg.workers),
        cfg.difficulty, cfg.metric);
    emit_report(baseline, cfg.out_dir, "baseline_" + stem);
    const lfp::DecrementSummary sums = lfp::fp_tp_sums(baseline, report);
    char buf[160];
    std::snprintf(buf, sizeof buf, "FP sum: %ld -> %ld (%+.2f%%)\nTP sum: %ld -> %ld (%+.2f%%)\n",
                  sums.fp_before, sums.fp_after, sums.fp_decrement_percent, sums.tp_before,
                  sums.tp_after, sums.tp_decrement_percent);
    std::cout << buf;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
  std::string pred_dir, label_dir, velo_dir, calib_dir, out_dir, cad_path;
  std::vector<double> kappas;
  lfp::Difficulty difficulty = lfp::Difficulty::kModerate;
  lfp::MetricKind metric = lfp::MetricKind::k3d;
  unsigned workers = std::thread::hardware_concurrency();
};

int run_sweep(const SweepConfig& cfg) {
  std::vector<double> kappas = cfg.kappas;
  std::sort(kappas.begin(), kappas.end());
  const std::size_t before = kappas.size();
  kappas.erase(std::unique(kappas.begin(), kappas.end()), kappas.end());
  if (kappas.size() < before) std::cerr << "warning: duplicate kappa values dropped\n";
  if (kappas.size() < 2) {
    std::cerr << "error: sweep needs at least 2 distinct kappa values\n";
    return 1;
  }
  for (double k : kappas) {
    if (!(k > 0.0 && k <= 1.0)) {
      std::cerr << "error: kappa " << k << " outside (0, 1]\n";
      return 1;
    }
  }

  const std::vector<std::string> ids = list_ids(cfg.pred_dir, ".txt");
  require_ids_present(ids, cfg.label_dir, ".txt", cfg.label_dir);
  require_ids_present(ids, cfg.velo_dir, ".bin", cfg.velo_dir);
  require_ids_present(ids, cfg.calib_dir, ".txt", cfg.calib_dir);
  fs::create_directories(cfg.out_dir);
  const lfp::CadModel cad = load_model(cfg.cad_path);

  struct FrameData {
    lfp::Frame frame;
    std::vector<lfp::EvalGroundTruth> gts;
  };
  std::vector<FrameData> data(ids.size());
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    const std::string& id = ids[i];
    const lfp::CalibrationSet calib =
        lfp::parse_calib((fs::path(cfg.calib_dir) / (id + ".txt")).string());
    const std::string pred_path = (fs::path(cfg.pred_dir) / (id + ".txt")).string();
    data[i].frame.id = id;
    data[i].frame.cloud =
        lfp::parse_velodyne((fs::path(cfg.velo_dir) / (id + ".bin")).string()).points;
    data[i].frame.detections = to_detections(lfp::parse_labels(pred_path), calib, pred_path);
    for (const lfp::KittiLabel& gt :
         lfp::parse_labels((fs::path(cfg.label_dir) / (id + ".txt")).string())) {
      data[i].gts.push_back(
          {lfp::camera_to_lidar_box(gt, calib), gt_ignored(gt, cfg.difficulty)});
    }
  });

  std::cout << "kappa  removed  hr_precision  max_recall\n";
  std::string dat;
  for (double kappa : kappas) {
    std::vector<lfp::EvalFrame> frames(data.size());
    std::atomic<std::size_t> removed{0};
    parallel_for(data.size(), cfg.workers, [&](std::size_t i) {
      const lfp::FilterOutcome outcome = lfp::filter_detections(data[i].frame, cad, kappa);
      frames[i].preds = outcome.kept;
      frames[i].gts = data[i].gts;
      removed += outcome.removed.size();
    });
    const lfp::EvalReport report = lfp::evaluate_frames(frames, cfg.difficulty, cfg.metric);
    char row[96];
    std::snprintf(row, sizeof row, "%.2f   %-7zu  %-12.4f  %.4f\n", kappa, removed.load(),
                  report.hr_precision_percent, report.curve.max_recall);
    std::cout << row;
    dat += fmt("%.2f", kappa) + " " + std::to_string(removed.load()) + " " +
           fmt("%.4f", report.hr_precision_percent) + " " + fmt("%.4f", report.curve.max_recall) +
           "\n";
  }
  atomic_write(fs::path(cfg.out_dir) / "sweep.dat", dat);
  return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::string scene_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t frames = 1;
  bool fp_scenario = false;
};

int run_synth(const SynthConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  if (cfg.fp_scenario) {
    for (std::size_t i = 0; i < cfg.frames; ++i) {
      lfp::write_scenario_frame(lfp::make_fp_scenario(cfg.seed + i), cfg.out_dir, i);
    }
    std::cout << "wrote " << cfg.frames << " scenario frame(s) to " << cfg.out_dir << "\n";
    return 0;
  }

  const lfp::SceneDescription desc = lfp::parse_scene(cfg.scene_path);
  const lfp::RaycastResult cast = lfp::raycast(desc.scene, desc.grid);
  const lfp::CalibrationSet calib = lfp::nominal_calibration();
  const std::string name = lfp::frame_name(0);
  for (const char* sub : {"velodyne", "label_2", "calib"}) {
    fs::create_directories(fs::path(cfg.out_dir) / sub);
  }
  lfp::VelodyneScan scan;
  scan.points = cast.points;
  scan.reflectance.assign(cast.points.size(), 0.0f);
  lfp::write_velodyne(scan, (fs::path(cfg.out_dir) / "velodyne" / (name + ".bin")).string());
  std::vector<lfp::KittiLabel> labels;
  for (const lfp::SceneObject& obj : desc.scene.objects) {
    if (obj.car_box) labels.push_back(lfp::lidar_to_camera_label(*obj.car_box, calib, "Car"));
  }
  lfp::write_labels(labels, (fs::path(cfg.out_dir) / "label_2" / (name + ".txt")).string());
  lfp::write_calib(calib, (fs::path(cfg.out_dir) / "calib" / (name + ".txt")).string());
  std::cout << "objects: " << desc.scene.objects.size() << " returns: " << cast.points.size()
            << " labels: " << labels.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometric false-positive rejection for LiDAR 3D vehicle detection"};
  app.require_subcommand(1);

  auto kappa_check = [](const std::string& v) -> std::string {
    const double k = std::atof(v.c_str());
    return (k > 0.0 && k <= 1.0) ? "" : "kappa must lie in (0, 1]";
  };
  const std::map<std::string, lfp::Difficulty> difficulty_map{
      {"moderate", lfp::Difficulty::kModerate}, {"hard", lfp::Difficulty::kHard}};
  const std::map<std::string, lfp::MetricKind> metric_map{{"3d", lfp::MetricKind::k3d},
                                                          {"bev", lfp::MetricKind::kBev}};

  FilterConfig filter_cfg;
  CLI::App* filter = app.add_subcommand("filter", "delete detections with returns behind them");
  filter->add_option("--pred", filter_cfg.pred_dir, "prediction label dir")->required();
  filter->add_option("--velo", filter_cfg.velo_dir, "velodyne .bin dir")->required();
  filter->add_option("--calib", filter_cfg.calib_dir, "calibration dir")->required();
  filter->add_option("--out", filter_cfg.out_dir, "output dir")->required();
  filter->add_option("--cad", filter_cfg.cad_path, "CAD point file (default: built-in sedan)");
  filter->add_option("--kappa", filter_cfg.kappa, "CAD scale ratio")->check(kappa_check);
  filter->add_option("--workers", filter_cfg.workers, "worker threads");
  filter->add_flag("--diagnostics", filter_cfg.diagnostics, "per-box diagnostics on stderr");

  EvalConfig eval_cfg;
  CLI::App* eval = app.add_subcommand("eval", "AP and HR-Precision over 40 recall positions");
  eval->add_option("--pred", eval_cfg.pred_dir, "prediction label dir")->required();
  eval->add_option("--label", eval_cfg.label_dir, "ground-truth label dir")->required();
  eval->add_option("--calib", eval_cfg.calib_dir, "calibration dir")->required();
  eval->add_option("--out", eval_cfg.out_dir, "output dir")->required();
  eval->add_option("--baseline", eval_cfg.baseline_dir,
                   "unfiltered prediction dir for decrement summary");
  eval->add_option("--difficulty", eval_cfg.difficulty, "difficulty")
      ->transform(CLI::CheckedTransformer(difficulty_map));
  eval->add_option("--metric", eval_cfg.metric, "IoU metric")
      ->transform(CLI::CheckedTransformer(metric_map));
  eval->add_option("--workers", eval_cfg.workers, "worker threads");

  SweepConfig sweep_cfg;
  CLI::App* sweep = app.add_subcommand("sweep", "HR-Precision across CAD scale ratios");
  sweep->add_option("--pred", sweep_cfg.pred_dir, "prediction label dir")->required();
  sweep->add_option("--label", sweep_cfg.label_dir, "ground-truth label dir")->required();
  sweep->add_option("--velo", sweep_cfg.velo_dir, "velodyne .bin dir")->required();
  sweep->add_option("--calib", sweep_cfg.calib_dir, "calibration dir")->required();
  sweep->add_option("--out", sweep_cfg.out_dir, "output dir")->required();
  sweep->add_option("--cad", sweep_cfg.cad_path, "CAD point file (default: built-in sedan)");
  sweep->add_option("--kappa", sweep_cfg.kappas, "kappa values (repeatable, need >= 2)");
  sweep->add_option("--difficulty", sweep_cfg.difficulty, "difficulty")
      ->transform(CLI::CheckedTransformer(difficulty_map));
  sweep->add_option("--metric", sweep_cfg.metric, "IoU metric")
      ->transform(CLI::CheckedTransformer(metric_map));
  sweep->add_option("--workers", sweep_cfg.workers, "worker threads");

  SynthConfig synth_cfg;
  CLI::App* synth = app.add_subcommand("synth", "ray-cast synthetic KITTI frames");
  CLI::Option* scene_opt = synth->add_option("--scene", synth_cfg.scene_path, "scene file");
  synth->add_option("--out", synth_cfg.out_dir, "output dir")->required();
  synth->add_option("--seed", synth_cfg.seed, "scenario seed");
  synth->add_option("--frames", synth_cfg.frames, "scenario frame count");
  CLI::Option* fp_opt =
      synth->add_flag("--fp-scenario", synth_cfg.fp_scenario,
                      "generate seeded car + spurious-box scenario frames");
  scene_opt->excludes(fp_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*filter) return run_filter(filter_cfg);
    if (*eval) return run_eval(eval_cfg);
    if (*sweep) return run_sweep(sweep_cfg);
    if (*synth) {
      if (!synth_cfg.fp_scenario && synth_cfg.scene_path.empty()) {
        std::cerr << "error: synth needs either --scene or --fp-scenario\n";
        return 1;
      }
      return run_synth(synth_cfg);
    }
    return 1;
  } catch (const IdMismatch& e) {
    std::cerr << "error: frame id '" << e.id << "' missing from " << e.missing_from << "\n";
    return 2;
  } catch (const lfp::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lfp::UndefinedRecallError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
}
