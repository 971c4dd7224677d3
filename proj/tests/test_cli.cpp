#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lfp/lfp.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct ToolRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the installed binary with shell-style args, capturing the streams.
ToolRun run_tool(const testutil::TempDir& dir, const std::string& args) {
  static int invocation = 0;
  const std::string out_path = dir.file("stdout_" + std::to_string(invocation) + ".txt");
  const std::string err_path = dir.file("stderr_" + std::to_string(invocation) + ".txt");
  ++invocation;
  const std::string cmd =
      std::string(LFP_TOOL_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  ToolRun run;
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  run.out = testutil::read_bytes(out_path);
  run.err = testutil::read_bytes(err_path);
  return run;
}

std::map<std::string, std::string> collect_tree(const fs::path& root) {
  std::map<std::string, std::string> tree;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      tree[fs::relative(entry.path(), root).string()] =
          testutil::read_bytes(entry.path());
    }
  }
  return tree;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

lfp::OrientedBox3 make_box(lfp::Point3 center, lfp::Size3 size, double yaw) {
  lfp::OrientedBox3 box;
  box.center = center;
  box.size = size;
  box.yaw = yaw;
  return box;
}

/// Ten single-detection frames, each backed by a narrow strip whose lateral
/// offset varies, so the number of removed boxes grows with kappa.
void write_planar_tree(const fs::path& root) {
  for (const char* sub : {"velodyne", "label_2", "calib", "pred"}) {
    fs::create_directories(root / sub);
  }
  for (std::size_t v = 0; v < 10; ++v) {
    const lfp::PlanarTarget target = lfp::make_planar_target(v, 10);
    const std::string name = lfp::frame_name(v);

    lfp::VelodyneScan scan;
    scan.points = lfp::raycast(target.scene, target.grid).points;
    scan.reflectance.assign(scan.points.size(), 0.0f);
    lfp::write_velodyne(scan, (root / "velodyne" / (name + ".bin")).string());

    const lfp::KittiLabel gt =
        lfp::lidar_to_camera_label(target.detection.box, target.calib, "Car");
    lfp::write_labels({gt}, (root / "label_2" / (name + ".txt")).string());

    const lfp::KittiLabel pred = lfp::lidar_to_camera_label(
        target.detection.box, target.calib, "Car", target.detection.score);
    lfp::write_labels({pred}, (root / "pred" / (name + ".txt")).string());

    lfp::write_calib(target.calib, (root / "calib" / (name + ".txt")).string());
  }
}

/// One frame whose scored predictions produce, in descending score order,
/// the flag sequence TP, FP, TP, TP, FP, TP against 4 ground truths.
void write_hand_eval_tree(const fs::path& root) {
  for (const char* sub : {"label_2", "calib", "pred", "filtered"}) {
    fs::create_directories(root / sub);
  }
  const lfp::CalibrationSet calib = lfp::nominal_calibration();
  const std::vector<lfp::OrientedBox3> gt_boxes = {
      make_box({12, -9, -0.6}, {1.8, 4.5, 1.5}, 0.0),
      make_box({13, -3, -0.6}, {1.8, 4.5, 1.5}, 0.0),
      make_box({14, 3, -0.6}, {1.8, 4.5, 1.5}, 0.0),
      make_box({15, 9, -0.6}, {1.8, 4.5, 1.5}, 0.0)};
  const std::vector<lfp::OrientedBox3> fp_boxes = {
      make_box({13, -6, -0.6}, {1.8, 4.5, 1.5}, 0.0),
      make_box({14, 6, -0.6}, {1.8, 4.5, 1.5}, 0.0)};

  std::vector<lfp::KittiLabel> gts;
  for (const lfp::OrientedBox3& box : gt_boxes) {
    gts.push_back(lfp::lidar_to_camera_label(box, calib, "Car"));
  }
  lfp::write_labels(gts, (root / "label_2" / "000000.txt").string());

  // matching rows are byte-identical to their ground truths, so IoU is 1
  std::vector<lfp::KittiLabel> preds = {
      lfp::lidar_to_camera_label(gt_boxes[0], calib, "Car", 0.9),
      lfp::lidar_to_camera_label(fp_boxes[0], calib, "Car", 0.8),
      lfp::lidar_to_camera_label(gt_boxes[1], calib, "Car", 0.7),
      lfp::lidar_to_camera_label(gt_boxes[2], calib, "Car", 0.6),
      lfp::lidar_to_camera_label(fp_boxes[1], calib, "Car", 0.5),
      lfp::lidar_to_camera_label(gt_boxes[3], calib, "Car", 0.4)};
  lfp::write_labels(preds, (root / "pred" / "000000.txt").string());

  // what a perfect FP filter would leave behind
  std::vector<lfp::KittiLabel> kept = {preds[0], preds[2], preds[3], preds[5]};
  lfp::write_labels(kept, (root / "filtered" / "000000.txt").string());

  lfp::write_calib(calib, (root / "calib" / "000000.txt").string());
}

}  // namespace

// ---------------------------------------------------------------------------
// usage and exit codes
// ---------------------------------------------------------------------------

TEST_CASE("no subcommand is a usage error; --help is not") {
  testutil::TempDir dir;
  CHECK(run_tool(dir, "").exit_code == 1);
  CHECK(run_tool(dir, "--help").exit_code == 0);
  CHECK(run_tool(dir, "filter").exit_code == 1);  // missing required options
}

TEST_CASE("filter on an empty prediction directory succeeds vacuously") {
  testutil::TempDir dir;
  for (const char* sub : {"pred", "velodyne", "calib", "out"}) {
    fs::create_directories(dir.path / sub);
  }
  const ToolRun run = run_tool(dir, "filter --pred " + dir.file("pred") + " --velo " +
                                        dir.file("velodyne") + " --calib " +
                                        dir.file("calib") + " --out " + dir.file("out"));
  CHECK(run.exit_code == 0);
  CHECK(run.out.find("frames: 0") != std::string::npos);
  CHECK(run.out.find("detections: 0 kept: 0 removed: 0") != std::string::npos);
  CHECK(testutil::read_bytes(dir.file("out/removals.log")).empty());
}

TEST_CASE("a missing velodyne frame is reported as an id mismatch") {
  testutil::TempDir dir;
  for (const char* sub : {"pred", "velodyne", "calib"}) {
    fs::create_directories(dir.path / sub);
  }
  testutil::write_text(dir.file("pred/000000.txt"), "");
  lfp::write_calib(lfp::nominal_calibration(), dir.file("calib/000000.txt"));
  const ToolRun run = run_tool(dir, "filter --pred " + dir.file("pred") + " --velo " +
                                        dir.file("velodyne") + " --calib " +
                                        dir.file("calib") + " --out " + dir.file("out"));
  CHECK(run.exit_code == 2);
  CHECK(run.err.find("000000") != std::string::npos);
}

TEST_CASE("corrupt predictions exit with the parse failure code") {
  testutil::TempDir dir;
  for (const char* sub : {"pred", "velodyne", "calib"}) {
    fs::create_directories(dir.path / sub);
  }
  testutil::write_text(dir.file("velodyne/000000.bin"), "");
  lfp::write_calib(lfp::nominal_calibration(), dir.file("calib/000000.txt"));

  const std::string base = " --velo " + dir.file("velodyne") + " --calib " +
                           dir.file("calib") + " --out " + dir.file("out");

  testutil::write_text(dir.file("pred/000000.txt"), "Car 0.0 0\n");
  CHECK(run_tool(dir, "filter --pred " + dir.file("pred") + base).exit_code == 3);

  // a 15-field row is a valid label but not a scored prediction
  const lfp::KittiLabel bare = lfp::lidar_to_camera_label(
      make_box({10, 0, -0.6}, {1.8, 4.5, 1.5}, 0.0), lfp::nominal_calibration(), "Car");
  lfp::write_labels({bare}, dir.file("pred/000000.txt"));
  CHECK(run_tool(dir, "filter --pred " + dir.file("pred") + base).exit_code == 3);
}

TEST_CASE("kappa outside (0,1] is rejected at the command line") {
  testutil::TempDir dir;
  const ToolRun run =
      run_tool(dir, "filter --pred x --velo x --calib x --out x --kappa 1.2");
  CHECK(run.exit_code == 1);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

TEST_CASE("synth requires exactly one of --scene and --fp-scenario") {
  testutil::TempDir dir;
  CHECK(run_tool(dir, "synth --out " + dir.file("out")).exit_code == 1);
  testutil::write_text(dir.file("scene.txt"), "");
  CHECK(run_tool(dir, "synth --scene " + dir.file("scene.txt") + " --fp-scenario --out " +
                          dir.file("out"))
            .exit_code == 1);
}

TEST_CASE("synth --fp-scenario is deterministic across runs") {
  testutil::TempDir dir;
  const std::string args = " --seed 3 --frames 2";
  REQUIRE(run_tool(dir, "synth --fp-scenario --out " + dir.file("a") + args).exit_code == 0);
  REQUIRE(run_tool(dir, "synth --fp-scenario --out " + dir.file("b") + args).exit_code == 0);
  const auto tree_a = collect_tree(dir.file("a"));
  const auto tree_b = collect_tree(dir.file("b"));
  REQUIRE(tree_a.size() == 8);  // 2 frames x (velodyne, label_2, calib, pred)
  REQUIRE(tree_a == tree_b);
}

TEST_CASE("synth --scene with a single wall returns only the wall hit") {
  testutil::TempDir dir;
  testutil::write_text(dir.file("scene.txt"),
                       "wall axis=x offset=10 extent=5\n"
                       "lidar az_min=0 az_max=0.001 az_step=1 el_min=0 el_max=0 el_step=1\n");
  const ToolRun run =
      run_tool(dir, "synth --scene " + dir.file("scene.txt") + " --out " + dir.file("out"));
  REQUIRE(run.exit_code == 0);
  CHECK(run.out.find("objects: 1 returns: 1 labels: 0") != std::string::npos);

  const lfp::VelodyneScan scan = lfp::parse_velodyne(dir.file("out/velodyne/000000.bin"));
  REQUIRE(scan.points.size() == 1);
  CHECK(scan.points[0].x == 10.0);
  CHECK(scan.points[0].y == 0.0);
  CHECK(scan.points[0].z == 0.0);
  CHECK(lfp::parse_labels(dir.file("out/label_2/000000.txt")).empty());
}

TEST_CASE("synth --scene on an empty scene writes empty artifacts") {
  testutil::TempDir dir;
  testutil::write_text(dir.file("scene.txt"), "# nothing here\n");
  const ToolRun run =
      run_tool(dir, "synth --scene " + dir.file("scene.txt") + " --out " + dir.file("out"));
  REQUIRE(run.exit_code == 0);
  CHECK(run.out.find("objects: 0 returns: 0 labels: 0") != std::string::npos);
  CHECK(lfp::parse_velodyne(dir.file("out/velodyne/000000.bin")).points.empty());
  CHECK(lfp::parse_labels(dir.file("out/label_2/000000.txt")).empty());
}

TEST_CASE("synth rejects a malformed scene file") {
  testutil::TempDir dir;
  testutil::write_text(dir.file("scene.txt"), "frob x=1\n");
  CHECK(run_tool(dir, "synth --scene " + dir.file("scene.txt") + " --out " + dir.file("out"))
            .exit_code == 3);
}

// ---------------------------------------------------------------------------
// filter on scenario data
// ---------------------------------------------------------------------------

TEST_CASE("filter deletes the spurious scenario boxes and nothing else") {
  testutil::TempDir dir;
  REQUIRE(run_tool(dir, "synth --fp-scenario --seed 0 --frames 2 --out " + dir.file("data"))
              .exit_code == 0);

  const ToolRun run = run_tool(
      dir, "filter --pred " + dir.file("data/pred") + " --velo " + dir.file("data/velodyne") +
               " --calib " + dir.file("data/calib") + " --out " + dir.file("kept"));
  REQUIRE(run.exit_code == 0);
  CHECK(run.out.find("kappa: 0.82") != std::string::npos);
  CHECK(run.out.find("frames: 2") != std::string::npos);

  std::size_t cars = 0, spurious = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const lfp::FpScenario sc = lfp::make_fp_scenario(i);  // the tool used seed 0 + i
    cars += sc.true_boxes.size();
    spurious += sc.spurious_indices.size();
    const std::vector<lfp::KittiLabel> kept =
        lfp::parse_labels(dir.file("kept/" + lfp::frame_name(i) + ".txt"));
    REQUIRE(kept.size() == sc.true_boxes.size());
    for (const lfp::KittiLabel& l : kept) {
      REQUIRE(l.score.has_value());
      REQUIRE(*l.score > 0.9);  // spurious boxes score below 0.65
    }
  }
  CHECK(run.out.find("detections: " + std::to_string(cars + spurious) +
                     " kept: " + std::to_string(cars) +
                     " removed: " + std::to_string(spurious)) != std::string::npos);
  CHECK(count_lines(testutil::read_bytes(dir.file("kept/removals.log"))) == spurious);
}

TEST_CASE("filtering already-filtered output removes nothing more") {
  testutil::TempDir dir;
  REQUIRE(run_tool(dir, "synth --fp-scenario --seed 1 --frames 2 --out " + dir.file("data"))
              .exit_code == 0);
  const std::string shared = " --velo " + dir.file("data/velodyne") + " --calib " +
                             dir.file("data/calib");
  REQUIRE(run_tool(dir, "filter --pred " + dir.file("data/pred") + shared + " --out " +
                            dir.file("pass1"))
              .exit_code == 0);

  const ToolRun second = run_tool(dir, "filter --pred " + dir.file("pass1") + shared +
                                           " --out " + dir.file("pass2") + " --workers 3");
  REQUIRE(second.exit_code == 0);
  CHECK(second.out.find("removed: 0") != std::string::npos);
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string name = lfp::frame_name(i) + ".txt";
    REQUIRE(testutil::read_bytes(dir.file("pass2/" + name)) ==
            testutil::read_bytes(dir.file("pass1/" + name)));
  }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

TEST_CASE("eval reproduces the hand-computed sweep and decrement summary") {
  testutil::TempDir dir;
  write_hand_eval_tree(dir.path);
  const std::string common =
      " --label " + dir.file("label_2") + " --calib " + dir.file("calib");

  const ToolRun baseline = run_tool(
      dir, "eval --pred " + dir.file("pred") + common + " --out " + dir.file("report"));
  REQUIRE(baseline.exit_code == 0);
  CHECK(baseline.out.find("# eval settings: metric=3d difficulty=moderate "
                          "iou_threshold=0.70") != std::string::npos);
  CHECK(baseline.out.find("AP: 79.1667") != std::string::npos);
  CHECK(baseline.out.find("HR-Precision: 66.6667") != std::string::npos);
  CHECK(fs::exists(dir.file("report/report_3d_moderate.txt")));
  CHECK(fs::exists(dir.file("report/report_3d_moderate.csv")));

  // the filtered predictions with a baseline: FP sum drops to zero, TP intact
  const ToolRun filtered = run_tool(
      dir, "eval --pred " + dir.file("filtered") + common + " --baseline " +
               dir.file("pred") + " --out " + dir.file("report2"));
  REQUIRE(filtered.exit_code == 0);
  CHECK(filtered.out.find("AP: 100.0000") != std::string::npos);
  CHECK(filtered.out.find("FP sum: 40 -> 0 (-100.00%)") != std::string::npos);
  CHECK(filtered.out.find("TP sum: 100 -> 100 (+0.00%)") != std::string::npos);
  CHECK(fs::exists(dir.file("report2/baseline_report_3d_moderate.txt")));
}

TEST_CASE("eval without usable ground truths exits with the recall code") {
  testutil::TempDir dir;
  for (const char* sub : {"pred", "label_2", "calib"}) {
    fs::create_directories(dir.path / sub);
  }
  testutil::write_text(dir.file("pred/000000.txt"), "");
  testutil::write_text(dir.file("label_2/000000.txt"),
                       "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 "
                       "-1000 -1000 -1000 -10\n");
  lfp::write_calib(lfp::nominal_calibration(), dir.file("calib/000000.txt"));
  const ToolRun run = run_tool(dir, "eval --pred " + dir.file("pred") + " --label " +
                                        dir.file("label_2") + " --calib " +
                                        dir.file("calib") + " --out " + dir.file("report"));
  CHECK(run.exit_code == 4);
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

TEST_CASE("sweep needs two distinct kappas and dedups the list") {
  testutil::TempDir dir;
  write_planar_tree(dir.path);
  const std::string common = "sweep --pred " + dir.file("pred") + " --label " +
                             dir.file("label_2") + " --velo " + dir.file("velodyne") +
                             " --calib " + dir.file("calib") + " --out " + dir.file("out");

  CHECK(run_tool(dir, common + " --kappa 0.82").exit_code == 1);
  CHECK(run_tool(dir, common + " --kappa 0.82 0.82").exit_code == 1);

  const ToolRun dup = run_tool(dir, common + " --kappa 0.5 0.5 1.0");
  REQUIRE(dup.exit_code == 0);
  CHECK(dup.err.find("duplicate kappa") != std::string::npos);
  CHECK(count_lines(testutil::read_bytes(dir.file("out/sweep.dat"))) == 2);
}

TEST_CASE("sweep removal counts rise with kappa on the planar suite") {
  testutil::TempDir dir;
  write_planar_tree(dir.path);
  const ToolRun run = run_tool(
      dir, "sweep --pred " + dir.file("pred") + " --label " + dir.file("label_2") +
               " --velo " + dir.file("velodyne") + " --calib " + dir.file("calib") +
               " --out " + dir.file("out") + " --kappa 0.5 0.82 1.0");
  REQUIRE(run.exit_code == 0);

  std::vector<double> kappas;
  std::vector<std::size_t> removed;
  std::size_t pos = 0;
  while (pos < run.out.size()) {
    std::size_t end = run.out.find('\n', pos);
    if (end == std::string::npos) end = run.out.size();
    const std::string line = run.out.substr(pos, end - pos);
    pos = end + 1;
    double kappa = 0.0, hr = 0.0, mr = 0.0;
    std::size_t rem = 0;
    if (std::sscanf(line.c_str(), "%lf %zu %lf %lf", &kappa, &rem, &hr, &mr) == 4) {
      kappas.push_back(kappa);
      removed.push_back(rem);
    }
  }
  REQUIRE(kappas == std::vector<double>{0.5, 0.82, 1.0});
  REQUIRE(removed.size() == 3);
  CHECK(removed[0] <= removed[1]);
  CHECK(removed[1] <= removed[2]);
  CHECK(removed[2] > removed[0]);  // the suite is built to spread across kappa
  CHECK(count_lines(testutil::read_bytes(dir.file("out/sweep.dat"))) == 3);
}
