#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mush/pipeline.hpp"
#include "mush/synthetic.hpp"

using namespace mush;

namespace {

SceneSpec two_cap_spec() {
  SceneSpec s;
  s.intrinsics = {300.0, 300.0, 159.5, 119.5, 320, 240, 0.001};
  s.plane_depth = 0.45;
  s.caps.push_back({Vec3(-0.07, 0.0, 0.45), 0.02});
  s.caps.push_back({Vec3(0.07, 0.02, 0.45), 0.025});
  s.intensity_noise = 5.0;
  s.seed = 31;
  return s;
}

const GtCap* nearest_gt(const std::vector<GtCap>& gts, const Vec3& p) {
  const GtCap* best = nullptr;
  double best_d = std::numeric_limits<double>::max();
  for (const GtCap& g : gts) {
    const double d = (g.position - p).norm();
    if (d < best_d) {
      best_d = d;
      best = &g;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("pipeline finds, localizes and measures both caps") {
  const SceneSpec spec = two_cap_spec();
  const SyntheticScene scene = render_scene(spec);
  const PipelineResult result =
      run_pipeline(scene.rgb, scene.depth, spec.intrinsics, PipelineConfig{});

  CHECK(result.rejects.empty());
  REQUIRE(result.caps.size() == 2);
  for (const CapReport& rep : result.caps) {
    const GtCap* gt = nearest_gt(scene.gt_caps, rep.position);
    REQUIRE(gt != nullptr);
    CHECK((rep.position - gt->position).norm() <= 0.005);
    CHECK(rep.distance == Catch::Approx(gt->distance).margin(0.005));
    CHECK(rep.diameter.value_m == Catch::Approx(gt->diameter).margin(0.003));
    CHECK_FALSE(rep.has_pose);
  }
  // Score-sorted output.
  CHECK(result.caps[0].circle.score >= result.caps[1].circle.score);
}

TEST_CASE("featureless frame yields an empty result") {
  SceneSpec s;
  s.intrinsics = {300.0, 300.0, 159.5, 119.5, 320, 240, 0.001};
  s.plane_depth = 0.45;
  s.intensity_noise = 0.0;  // constant gray image
  const SyntheticScene scene = render_scene(s);
  const PipelineResult result =
      run_pipeline(scene.rgb, scene.depth, s.intrinsics, PipelineConfig{});
  CHECK(result.caps.empty());
  CHECK(result.rejects.empty());
  CHECK(result.segmentation.count() == 0);
}

TEST_CASE("a cap whose depth is gone is rejected at the localize stage") {
  SceneSpec s;
  s.intrinsics = {300.0, 300.0, 159.5, 119.5, 320, 240, 0.001};
  s.plane_depth = 0.45;
  s.caps.push_back({Vec3(0.0, 0.0, 0.45), 0.02});
  s.intensity_noise = 3.0;
  s.seed = 8;
  // Apparent radius is ~13 px; this hole swallows the whole fill search.
  s.holes.push_back({159.5, 119.5, 20.0});
  const SyntheticScene scene = render_scene(s);
  const PipelineResult result =
      run_pipeline(scene.rgb, scene.depth, s.intrinsics, PipelineConfig{});

  CHECK(result.caps.empty());
  REQUIRE(result.rejects.size() == 1);
  CHECK(result.rejects[0].stage == "localize");
  CHECK_FALSE(result.rejects[0].reason.empty());
}

TEST_CASE("pipeline pose stage recovers the cap axis from a model") {
  SceneSpec s;
  s.intrinsics = {300.0, 300.0, 159.5, 119.5, 320, 240, 0.001};
  s.plane_depth = 0.45;
  s.caps.push_back({Vec3(0.0, 0.0, 0.45), 0.02});
  s.intensity_noise = 3.0;
  s.seed = 12;
  const SyntheticScene scene = render_scene(s);
  const PointCloud model = sample_cap_cloud(0.02, 3000, {}, 0.0, 1);

  const PipelineResult result =
      run_pipeline(scene.rgb, scene.depth, s.intrinsics, PipelineConfig{}, &model);
  REQUIRE(result.caps.size() == 1);
  const CapReport& rep = result.caps[0];
  REQUIRE(rep.has_pose);
  // The crop keeps a ring of background plane, so the bound stays loose.
  CHECK(angle_between(rep.normal, scene.gt_caps[0].normal) <= 15.0);
  CHECK(rep.pose_fitness >= 0.7);
  const double qn = std::sqrt(rep.rotation.x * rep.rotation.x + rep.rotation.y * rep.rotation.y +
                              rep.rotation.z * rep.rotation.z + rep.rotation.w * rep.rotation.w);
  CHECK(qn == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("report json carries every cap and reject") {
  const SceneSpec spec = two_cap_spec();
  const SyntheticScene scene = render_scene(spec);
  const PipelineResult result =
      run_pipeline(scene.rgb, scene.depth, spec.intrinsics, PipelineConfig{});
  const Json j = pipeline_result_to_json(result, spec.intrinsics);

  CHECK(j.at("image").at("width") == 320);
  REQUIRE(j.at("caps").size() == result.caps.size());
  const Json& c0 = j.at("caps").at(0);
  CHECK(c0.at("center_px").size() == 2);
  CHECK(c0.at("position_m").size() == 3);
  CHECK(c0.at("diameter_m").is_number());
  CHECK(c0.at("pose").is_null());
  CHECK(j.at("rejects").is_array());
  CHECK(j.at("rejects").empty());
}

TEST_CASE("overlay paints detected outlines red") {
  ImageRgb img(64, 64);
  for (auto& px : img.data) px = {10, 10, 10};
  const ImageRgb out = draw_detections(img, {Circle{32, 32, 10, 1}});
  const auto& on = out.at(42, 32);
  CHECK(on[0] == 255);
  CHECK(on[1] == 0);
  const auto& off = out.at(32, 32);
  CHECK(off[0] == 10);
}

TEST_CASE("pipeline rejects mismatched frame shapes") {
  ImageRgb rgb(32, 32);
  DepthImage depth(16, 32);
  CameraIntrinsics intr{300, 300, 16, 16, 32, 32, 0.001};
  CHECK_THROWS_AS(run_pipeline(rgb, depth, intr, PipelineConfig{}), Error);
}
