// Renders a synthetic three-cap scene, runs the full detection pipeline, and
// aligns a hemisphere model to one simulated cap cloud.

#include <cstdio>

#include "mush/mush.hpp"

int main() {
  mush::SceneSpec spec;
  spec.intrinsics = {600.0, 600.0, 319.5, 239.5, 640, 480, 0.001};
  spec.plane_depth = 0.45;
  spec.caps = {
      {{-0.06, -0.03, 0.45}, 0.020},
      {{0.05, 0.02, 0.45}, 0.015},
      {{-0.01, 0.06, 0.45}, 0.025},
  };
  spec.intensity_noise = 5.0;
  spec.seed = 7;
  const mush::SyntheticScene scene = mush::render_scene(spec);

  mush::PipelineConfig cfg;
  const mush::PipelineResult result =
      mush::run_pipeline(scene.rgb, scene.depth, spec.intrinsics, cfg);

  std::printf("detected %zu caps (%zu rejected)\n", result.caps.size(), result.rejects.size());
  for (const auto& cap : result.caps) {
    std::printf(
        "  px=(%.1f, %.1f) r=%.1f  position=(%.3f, %.3f, %.3f) m  distance=%.3f m  "
        "diameter=%.1f mm%s\n",
        cap.circle.cx, cap.circle.cy, cap.circle.r, cap.position.x(), cap.position.y(),
        cap.position.z(), cap.distance, cap.diameter.value_m * 1000.0,
        cap.fill_used ? "  (hole-filled)" : "");
  }

  const mush::PointCloud model = mush::sample_cap_cloud(0.020, 4000, {}, 0.0, 1);
  mush::RigidTransform truth;
  truth.R = mush::axis_angle_to_matrix({1.0, 0.5, 0.0}, 0.4);
  truth.t = {0.02, -0.01, 0.40};
  const mush::PointCloud sample = mush::sample_cap_cloud(0.020, 2500, truth, 0.0005, 2);

  const mush::PoseEstimate pose = mush::estimate_pose(model, sample);
  std::printf("pose: fitness=%.3f inlier_rmse=%.3f mm\n", pose.icp.fitness,
              pose.icp.inlier_rmse * 1000.0);
  std::printf("  quaternion xyzw = (%.4f, %.4f, %.4f, %.4f)\n", pose.rotation.x, pose.rotation.y,
              pose.rotation.z, pose.rotation.w);
  const mush::Vec3 gt_normal = truth.R.col(2);
  std::printf("  cap normal error = %.2f deg\n", mush::angle_between(pose.normal, gt_normal));
  return 0;
}
