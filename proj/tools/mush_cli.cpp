// Command-line frontend: detect, pose, synth, eval, depth-accuracy.
// Exit codes: 0 success, 1 requirement not met, 2 bad input or I/O failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mush/mush.hpp"

namespace {

mush::Vec3 vec3_from_json(const mush::Json& a) {
  if (!a.is_array() || a.size() != 3) throw mush::IoError("expected a 3-element array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

mush::CvBackend backend_from_string(const std::string& s) {
  if (s == "pde") return mush::CvBackend::pde;
  if (s == "morphological") return mush::CvBackend::morphological;
  throw mush::IoError("unknown chan_vese backend: " + s);
}

struct DetectConfig {
  mush::PipelineConfig pipeline;
  std::string model_path;
};

DetectConfig detect_config_from_json(const mush::Json& j) {
  DetectConfig out;
  mush::PipelineConfig& cfg = out.pipeline;
  out.model_path = j.value("model", std::string());
  if (j.contains("chan_vese")) {
    const auto& c = j.at("chan_vese");
    auto& p = cfg.chan_vese;
    p.mu = c.value("mu", p.mu);
    p.nu = c.value("nu", p.nu);
    p.lambda1 = c.value("lambda1", p.lambda1);
    p.lambda2 = c.value("lambda2", p.lambda2);
    p.p = c.value("p", p.p);
    p.eps = c.value("eps", p.eps);
    p.dt = c.value("dt", p.dt);
    p.max_iter = c.value("max_iter", p.max_iter);
    p.tol = c.value("tol", p.tol);
    if (c.contains("backend")) p.backend = backend_from_string(c.at("backend").get<std::string>());
  }
  if (j.contains("detect")) {
    const auto& d = j.at("detect");
    cfg.detect.rmin = d.value("rmin", cfg.detect.rmin);
    cfg.detect.rmax = d.value("rmax", cfg.detect.rmax);
    cfg.detect.score_thresh = d.value("score_thresh", cfg.detect.score_thresh);
    cfg.detect.nms_dist = d.value("nms_dist", cfg.detect.nms_dist);
  }
  if (j.contains("open_kernel")) {
    const auto& k = j.at("open_kernel");
    if (!k.is_array() || k.size() != 2) throw mush::IoError("open_kernel must be [w, h]");
    cfg.open_kernel_w = k[0].get<int>();
    cfg.open_kernel_h = k[1].get<int>();
  }
  cfg.min_cap_points = j.value("min_cap_points", cfg.min_cap_points);
  cfg.crop_radius_factor = j.value("crop_radius_factor", cfg.crop_radius_factor);
  if (j.contains("pose")) {
    const auto& p = j.at("pose");
    cfg.pose.voxel_size = p.value("voxel_size", cfg.pose.voxel_size);
    cfg.pose.normal_knn = p.value("normal_knn", cfg.pose.normal_knn);
    cfg.pose.feature_radius_factor =
        p.value("feature_radius_factor", cfg.pose.feature_radius_factor);
    cfg.pose.icp_dist_factor = p.value("icp_dist_factor", cfg.pose.icp_dist_factor);
    cfg.pose.icp_max_iter = p.value("icp_max_iter", cfg.pose.icp_max_iter);
    if (p.contains("model_up")) cfg.pose.model_up = vec3_from_json(p.at("model_up"));
  }
  return out;
}

struct DetectOpts {
  std::string rgb, depth, intrinsics, config, out, overlay;
  bool require_detections = false;
};

int run_detect(const DetectOpts& o) {
  DetectConfig cfg;
  if (!o.config.empty()) cfg = detect_config_from_json(mush::load_json(o.config));
  const mush::ImageRgb rgb = mush::read_png_rgb(o.rgb);
  const mush::DepthImage depth = mush::read_png_depth(o.depth);
  const mush::CameraIntrinsics intr = mush::load_intrinsics(o.intrinsics);

  std::optional<mush::PointCloud> model;
  if (!cfg.model_path.empty()) {
    model = mush::read_ply(cfg.model_path);
    cfg.pipeline.pose.model_up = mush::load_model_up(cfg.model_path);
  }
  const mush::PipelineResult result =
      mush::run_pipeline(rgb, depth, intr, cfg.pipeline, model ? &*model : nullptr);

  mush::save_json(o.out, mush::pipeline_result_to_json(result, intr));
  if (!o.overlay.empty()) {
    std::vector<mush::Circle> circles;
    for (const auto& c : result.caps) circles.push_back(c.circle);
    mush::write_png_rgb(o.overlay, mush::draw_detections(rgb, circles));
  }
  std::cout << "caps: " << result.caps.size() << ", rejects: " << result.rejects.size() << "\n";
  if (o.require_detections && result.caps.empty()) {
    std::cerr << "no caps detected\n";
    return 1;
  }
  return 0;
}

struct PoseOpts {
  std::string model, sample, out;
  double voxel = 0.002;
};

int run_pose(const PoseOpts& o) {
  const mush::PointCloud model = mush::read_ply(o.model);
  const mush::PointCloud sample = mush::read_ply(o.sample);
  mush::PoseParams params;
  params.voxel_size = o.voxel;
  params.model_up = mush::load_model_up(o.model);
  const mush::PoseEstimate est = mush::estimate_pose(model, sample, params);

  mush::Json j;
  j["rotation_xyzw"] = {est.rotation.x, est.rotation.y, est.rotation.z, est.rotation.w};
  j["translation_m"] = {est.transform.t.x(), est.transform.t.y(), est.transform.t.z()};
  j["normal"] = {est.normal.x(), est.normal.y(), est.normal.z()};
  j["fitness"] = est.icp.fitness;
  j["inlier_rmse"] = est.icp.inlier_rmse;
  j["iterations"] = est.icp.iterations;
  mush::save_json(o.out, j);
  std::cout << "fitness: " << est.icp.fitness << ", inlier_rmse: " << est.icp.inlier_rmse << "\n";
  return 0;
}

mush::SceneSpec scene_spec_from_json(const mush::Json& j) {
  mush::SceneSpec s;
  s.intrinsics = mush::intrinsics_from_json(j.at("intrinsics"));
  s.plane_depth = j.value("plane_depth", s.plane_depth);
  if (j.contains("caps"))
    for (const auto& c : j.at("caps"))
      s.caps.push_back({vec3_from_json(c.at("center")), c.at("radius").get<double>()});
  s.cap_intensity = j.value("cap_intensity", s.cap_intensity);
  s.bg_intensity = j.value("bg_intensity", s.bg_intensity);
  s.intensity_noise = j.value("intensity_noise", s.intensity_noise);
  s.depth_noise = j.value("depth_noise", s.depth_noise);
  s.hole_prob = j.value("hole_prob", s.hole_prob);
  if (j.contains("holes"))
    for (const auto& h : j.at("holes"))
      s.holes.push_back({h.at("cx").get<double>(), h.at("cy").get<double>(),
                         h.at("r").get<double>()});
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

struct SynthOpts {
  std::string spec, out_dir;
};

int run_synth(const SynthOpts& o) {
  const mush::SceneSpec spec = scene_spec_from_json(mush::load_json(o.spec));
  const mush::SyntheticScene scene = mush::render_scene(spec);
  std::filesystem::create_directories(o.out_dir);
  const std::string dir = o.out_dir + "/";
  mush::write_png_rgb(dir + "rgb.png", scene.rgb);
  mush::write_png_depth(dir + "depth.png", scene.depth);
  mush::save_json(dir + "intrinsics.json", mush::intrinsics_to_json(spec.intrinsics));

  mush::Json gt;
  gt["circles"] = mush::Json::array();
  for (const auto& c : scene.gt_circles)
    gt["circles"].push_back({{"cx", c.cx}, {"cy", c.cy}, {"r", c.r}});
  gt["caps"] = mush::Json::array();
  for (const auto& c : scene.gt_caps) {
    mush::Json g;
    g["position_m"] = {c.position.x(), c.position.y(), c.position.z()};
    g["distance_m"] = c.distance;
    g["diameter_m"] = c.diameter;
    g["normal"] = {c.normal.x(), c.normal.y(), c.normal.z()};
    gt["caps"].push_back(g);
  }
  mush::save_json(dir + "gt.json", gt);
  std::cout << "wrote " << o.out_dir << " (" << spec.caps.size() << " caps)\n";
  return 0;
}

// Circles from a detection report ("caps" with center_px), a ground-truth
// file ("circles" with cx/cy/r), or a bare array. List order stands in for
// score order when no score field is present.
std::vector<mush::Circle> circles_from_json(const mush::Json& j) {
  std::vector<mush::Circle> out;
  const mush::Json* arr = nullptr;
  bool report_style = false;
  if (j.is_array()) {
    arr = &j;
  } else if (j.contains("caps") && j.at("caps").is_array() && !j.contains("circles")) {
    arr = &j.at("caps");
    report_style = true;
  } else if (j.contains("circles")) {
    arr = &j.at("circles");
  } else {
    throw mush::IoError("circles_from_json: no caps/circles array found");
  }
  std::size_t i = 0;
  for (const auto& e : *arr) {
    mush::Circle c;
    if (report_style || e.contains("center_px")) {
      const auto& ctr = e.at("center_px");
      c.cx = ctr[0].get<double>();
      c.cy = ctr[1].get<double>();
      c.r = e.at("radius_px").get<double>();
    } else {
      c.cx = e.at("cx").get<double>();
      c.cy = e.at("cy").get<double>();
      c.r = e.at("r").get<double>();
    }
    c.score = e.value("score", static_cast<double>(arr->size() - i));
    out.push_back(c);
    ++i;
  }
  return out;
}

struct EvalOpts {
  std::string pred, gt;
  double iou = 0.5;
};

int run_eval(const EvalOpts& o) {
  const auto pred = circles_from_json(mush::load_json(o.pred));
  const auto gt = circles_from_json(mush::load_json(o.gt));
  const mush::DetectionMetrics m = mush::match_detections(pred, gt, o.iou);

  mush::Json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["recall"] = m.recall;
  j["precision"] = m.precision;
  try {
    j["f_score"] = m.fscore();
  } catch (const mush::UndefinedScoreError&) {
    j["f_score"] = nullptr;
  }
  j["matches"] = mush::Json::array();
  for (const auto& match : m.matches) {
    const mush::Circle& d = pred[match.det];
    const mush::Circle& g = gt[match.gt];
    mush::Json e;
    e["det"] = match.det;
    e["gt"] = match.gt;
    e["iou"] = match.iou;
    e["center_err_px"] = std::hypot(d.cx - g.cx, d.cy - g.cy);
    e["radius_err_px"] = std::abs(d.r - g.r);
    j["matches"].push_back(e);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct DepthAccOpts {
  std::string depth, intrinsics;
  double gt_depth = 0.0;
  int window = 31;
};

int run_depth_accuracy(const DepthAccOpts& o) {
  const mush::DepthImage depth = mush::read_png_depth(o.depth);
  const mush::CameraIntrinsics intr = mush::load_intrinsics(o.intrinsics);
  const mush::DepthAccuracy a = mush::depth_accuracy(depth, intr, o.gt_depth, o.window);
  mush::Json j;
  j["mean_m"] = a.mean_m;
  j["std_m"] = a.std_m;
  j["min_m"] = a.min_m;
  j["max_m"] = a.max_m;
  j["range_m"] = a.range_m;
  j["offset_m"] = a.offset_m;
  j["valid_count"] = a.valid_count;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mushroom cap detection, localization and pose estimation"};
  app.require_subcommand(1);

  DetectOpts dopt;
  auto* detect = app.add_subcommand("detect", "Detect caps in an RGB-D frame");
  detect->add_option("--rgb", dopt.rgb, "Input RGB PNG")->required()->check(CLI::ExistingFile);
  detect->add_option("--depth", dopt.depth, "Input 16-bit depth PNG")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--intrinsics", dopt.intrinsics, "Camera intrinsics JSON")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--config", dopt.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  detect->add_option("--out", dopt.out, "Output report JSON")->required();
  detect->add_option("--overlay", dopt.overlay, "Write detection overlay PNG");
  detect->add_flag("--require-detections", dopt.require_detections,
                   "Exit 1 when no caps are reported");

  PoseOpts popt;
  auto* pose = app.add_subcommand("pose", "Align a cap model to a sample cloud");
  pose->add_option("--model", popt.model, "Model PLY (source)")
      ->required()
      ->check(CLI::ExistingFile);
  pose->add_option("--sample", popt.sample, "Sample PLY (target)")
      ->required()
      ->check(CLI::ExistingFile);
  pose->add_option("--voxel", popt.voxel, "Downsample voxel size in meters");
  pose->add_option("--out", popt.out, "Output pose JSON")->required();

  SynthOpts sopt;
  auto* synth = app.add_subcommand("synth", "Render a synthetic RGB-D scene");
  synth->add_option("--spec", sopt.spec, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out-dir", sopt.out_dir, "Output directory")->required();

  EvalOpts eopt;
  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("--pred", eopt.pred, "Report or circle-list JSON")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--gt", eopt.gt, "Ground-truth circle JSON")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--iou", eopt.iou, "Match threshold");

  DepthAccOpts aopt;
  auto* dacc = app.add_subcommand("depth-accuracy", "Depth statistics over a central window");
  dacc->add_option("--depth", aopt.depth, "Input 16-bit depth PNG")
      ->required()
      ->check(CLI::ExistingFile);
  dacc->add_option("--intrinsics", aopt.intrinsics, "Camera intrinsics JSON")
      ->required()
      ->check(CLI::ExistingFile);
  dacc->add_option("--gt-depth", aopt.gt_depth, "True target distance in meters")->required();
  dacc->add_option("--window", aopt.window, "Window side length in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (detect->parsed()) return run_detect(dopt);
    if (pose->parsed()) return run_pose(popt);
    if (synth->parsed()) return run_synth(sopt);
    if (eval->parsed()) return run_eval(eopt);
    if (dacc->parsed()) return run_depth_accuracy(aopt);
  } catch (const mush::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
