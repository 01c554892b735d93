#include "sonoloop/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>

#include "sonoloop/errors.hpp"

namespace sonoloop {

namespace {

using nlohmann::json;

// Reads optional fields of one JSON object, recording typed issues with their paths.
class Fields {
 public:
  Fields(const json* node, std::string path, std::vector<std::string>& issues)
      : node_(node), path_(std::move(path)), issues_(&issues) {
    if (node_ && !node_->is_object()) {
      issue("", "expected an object");
      node_ = nullptr;
    }
  }

  const std::string& path() const noexcept { return path_; }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void issue(const std::string& key, const std::string& what) const {
    issues_->push_back((key.empty() ? path_ : at(key)) + ": " + what);
  }

  const json* raw(const std::string& key) const {
    if (!node_) {
      return nullptr;
    }
    auto it = node_->find(key);
    return it == node_->end() || it->is_null() ? nullptr : &*it;
  }

  bool has(const std::string& key) const { return raw(key) != nullptr; }

  Fields object(const std::string& key) const { return Fields(raw(key), at(key), *issues_); }

  double number(const std::string& key, double fallback,
                const std::function<bool(double)>& ok = nullptr, const char* requirement = "") const {
    const json* v = raw(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_number()) {
      issue(key, "expected a number");
      return fallback;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x) || (ok && !ok(x))) {
      issue(key, std::string("must be ") + (requirement[0] ? requirement : "finite"));
    }
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback,
                       const std::function<bool(std::int64_t)>& ok = nullptr, const char* requirement = "") const {
    const json* v = raw(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_number_integer()) {
      issue(key, "expected an integer");
      return fallback;
    }
    const auto x = v->get<std::int64_t>();
    if (ok && !ok(x)) {
      issue(key, std::string("must be ") + requirement);
    }
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    const json* v = raw(key);
    if (!v) {
      return fallback;
    }
    if (v->is_number_unsigned()) {
      return v->get<std::uint64_t>();
    }
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v->get<std::int64_t>());
    }
    issue(key, "expected a non-negative integer");
    return fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const json* v = raw(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_boolean()) {
      issue(key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const json* v = raw(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_string()) {
      issue(key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  const json* array(const std::string& key, bool required) const {
    const json* v = raw(key);
    if (!v) {
      if (required) {
        issue(key, "is required");
      }
      return nullptr;
    }
    if (!v->is_array()) {
      issue(key, "expected an array");
      return nullptr;
    }
    return v;
  }

  std::vector<std::string>& issues() const { return *issues_; }

 private:
  const json* node_;
  std::string path_;
  std::vector<std::string>* issues_;
};

auto positive = [](double x) { return x > 0.0; };
auto non_negative = [](double x) { return x >= 0.0; };
auto unit_interval = [](double x) { return x >= 0.0 && x <= 1.0; };

DiagonalCovariance read_covariance(const Fields& f, const std::string& sigma_key, const std::string& var_key,
                                   DiagonalCovariance fallback) {
  if (const json* v = f.raw(var_key)) {
    if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number()) {
      DiagonalCovariance c{(*v)[0].get<double>(), (*v)[1].get<double>()};
      if (c.xx < 0.0 || c.yy < 0.0) {
        f.issue(var_key, "variances must be non-negative");
      }
      return c;
    }
    f.issue(var_key, "expected [xx, yy]");
    return fallback;
  }
  if (f.has(sigma_key)) {
    return DiagonalCovariance::from_stddev(f.number(sigma_key, 0.0, non_negative, "non-negative"));
  }
  return fallback;
}

HeatmapParams read_heatmap(const Fields& f, HeatmapParams p) {
  p.centroid_cov = read_covariance(f, "sigma_c", "centroid_variance", p.centroid_cov);
  p.spread_cov = read_covariance(f, "sigma_m", "spread_variance", p.spread_cov);
  p.points = static_cast<int>(f.integer("points", p.points, [](auto v) { return v >= 1; }, "at least 1"));
  p.kernel = static_cast<int>(f.integer("kernel", p.kernel, [](auto v) { return v >= 1; }, "at least 1"));
  p.zero_fraction = f.number("zero_fraction", p.zero_fraction, unit_interval, "in [0, 1]");
  return p;
}

json heatmap_json(const HeatmapParams& p) {
  return {{"centroid_variance", {p.centroid_cov.xx, p.centroid_cov.yy}},
          {"spread_variance", {p.spread_cov.xx, p.spread_cov.yy}},
          {"points", p.points},
          {"kernel", p.kernel},
          {"zero_fraction", p.zero_fraction}};
}

Extent read_extent(const Fields& f) {
  Extent e;
  e.x_min = f.number("x_min", e.x_min);
  e.x_max = f.number("x_max", e.x_max);
  e.y_min = f.number("y_min", e.y_min);
  e.y_max = f.number("y_max", e.y_max);
  if (!(e.x_min < e.x_max) || !(e.y_min < e.y_max)) {
    f.issue("", "min must be below max on both axes");
  }
  return e;
}

SurfaceProfile read_surface(const Fields& f) {
  const Extent extent = read_extent(f.object("extent"));
  const std::string kind = f.text("kind", "flat");
  if (kind == "flat") {
    return SurfaceProfile::flat(extent, f.number("height", 0.0));
  }
  if (kind == "cylinder") {
    const double r = f.number("radius", 40.0, positive, "positive");
    return SurfaceProfile::cylinder(extent, r > 0.0 ? r : 40.0);
  }
  if (kind == "spline") {
    const auto nx = f.integer("nx", 2, [](auto v) { return v >= 2; }, "at least 2");
    const auto ny = f.integer("ny", 2, [](auto v) { return v >= 2; }, "at least 2");
    std::vector<double> heights;
    if (const json* a = f.array("heights", true)) {
      for (const auto& v : *a) {
        if (!v.is_number()) {
          f.issue("heights", "expected numbers");
          break;
        }
        heights.push_back(v.get<double>());
      }
    }
    if (nx >= 2 && ny >= 2 && heights.size() == static_cast<std::size_t>(nx * ny)) {
      return SurfaceProfile::spline(extent, static_cast<int>(nx), static_cast<int>(ny), std::move(heights));
    }
    f.issue("heights", "needs exactly nx*ny values");
    return SurfaceProfile::flat(extent);
  }
  f.issue("kind", "must be flat, cylinder or spline");
  return SurfaceProfile::flat(extent);
}

json surface_json(const SurfaceProfile& s) {
  const auto& e = s.extent();
  json out{{"extent", {{"x_min", e.x_min}, {"x_max", e.x_max}, {"y_min", e.y_min}, {"y_max", e.y_max}}}};
  switch (s.kind()) {
    case SurfaceKind::flat:
      out["kind"] = "flat";
      out["height"] = s.flat_height();
      break;
    case SurfaceKind::cylinder:
      out["kind"] = "cylinder";
      out["radius"] = s.radius();
      break;
    case SurfaceKind::spline_heightfield:
      out["kind"] = "spline";
      out["nx"] = s.control_nx();
      out["ny"] = s.control_ny();
      out["heights"] = s.control_heights();
      break;
  }
  return out;
}

double junction_position(const VesselBranch& parent, const Eigen::Vector3d& p) {
  double total = 0.0;
  double best = std::numeric_limits<double>::infinity();
  double at = 0.0;
  for (std::size_t k = 0; k + 1 < parent.centerline.size(); ++k) {
    const Eigen::Vector3d a = parent.centerline[k];
    const Eigen::Vector3d ab = parent.centerline[k + 1] - a;
    const double len = ab.norm();
    const double t = len > 0.0 ? std::clamp((p - a).dot(ab) / (len * len), 0.0, 1.0) : 0.0;
    const double d = (a + t * ab - p).norm();
    if (d < best) {
      best = d;
      at = total + t * len;
    }
    total += len;
  }
  return total > 0.0 ? at / total : 0.0;
}

VesselTree read_tree(const Fields& f) {
  std::vector<VesselBranch> branches;
  const int root = static_cast<int>(f.integer("root", 0));
  if (const json* arr = f.array("branches", true)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      Fields b(&(*arr)[i], f.at("branches") + "[" + std::to_string(i) + "]", f.issues());
      VesselBranch branch;
      branch.id = static_cast<int>(b.integer("id", static_cast<std::int64_t>(i)));
      if (b.has("parent")) {
        branch.parent = static_cast<int>(b.integer("parent", 0));
      }
      if (const json* pts = b.array("centerline", true)) {
        for (std::size_t k = 0; k < pts->size(); ++k) {
          const json& p = (*pts)[k];
          if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
            b.issue("centerline[" + std::to_string(k) + "]", "expected [x, y, z]");
            continue;
          }
          branch.centerline.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
      }
      if (const json* radii = b.array("radius", true)) {
        for (std::size_t k = 0; k < radii->size(); ++k) {
          const json& r = (*radii)[k];
          if (!r.is_number() || !(r.get<double>() > 0.0)) {
            b.issue("radius[" + std::to_string(k) + "]", "must be a positive number");
            continue;
          }
          branch.radius.push_back(r.get<double>());
        }
      }
      branches.push_back(std::move(branch));
    }
  }
  for (auto& b : branches) {
    if (!b.parent || b.centerline.empty()) {
      continue;
    }
    for (const auto& p : branches) {
      if (p.id == *b.parent && p.centerline.size() >= 2) {
        b.junction = junction_position(p, b.centerline.front());
      }
    }
  }
  return VesselTree(std::move(branches), root);
}

json tree_json(const VesselTree& tree) {
  json branches = json::array();
  for (const auto& b : tree.branches()) {
    json pts = json::array();
    for (const auto& p : b.centerline) {
      pts.push_back({p.x(), p.y(), p.z()});
    }
    json jb{{"id", b.id}, {"centerline", pts}, {"radius", b.radius}};
    jb["parent"] = b.parent ? json(*b.parent) : json(nullptr);
    branches.push_back(std::move(jb));
  }
  return {{"root", tree.root()}, {"branches", branches}};
}

const char* gaze_kind_name(GazeSourceKind k) {
  switch (k) {
    case GazeSourceKind::none:
      return "none";
    case GazeSourceKind::scripted:
      return "scripted";
    case GazeSourceKind::live:
      return "live";
  }
  return "none";
}

GazeSource read_gaze(const Fields& f, const std::filesystem::path& base_dir) {
  GazeSource g;
  const std::string kind = f.text("source", "none");
  if (kind == "none") {
    g.kind = GazeSourceKind::none;
  } else if (kind == "scripted") {
    g.kind = GazeSourceKind::scripted;
  } else if (kind == "live") {
    g.kind = GazeSourceKind::live;
  } else {
    f.issue("source", "must be none, scripted or live");
  }
  if (f.has("file")) {
    g.file = f.text("file", "");
    if (!g.file.empty() && g.file.is_relative() && !base_dir.empty()) {
      g.file = base_dir / g.file;
    }
  }
  g.noise_px = f.number("noise_px", g.noise_px, non_negative, "non-negative");
  if (const json* arr = f.array("schedule", false)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      Fields e(&(*arr)[i], f.at("schedule") + "[" + std::to_string(i) + "]", f.issues());
      g.schedule.push_back({e.number("from_y_mm", 0.0), static_cast<int>(e.integer("branch", 0))});
    }
  }
  if (const json* arr = f.array("glances", false)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      Fields e(&(*arr)[i], f.at("glances") + "[" + std::to_string(i) + "]", f.issues());
      GazeGlance glance;
      glance.start_tick = e.integer("start_tick", 0, [](auto v) { return v >= 0; }, "non-negative");
      glance.duration_ticks =
          static_cast<int>(e.integer("duration_ticks", 0, [](auto v) { return v >= 0; }, "non-negative"));
      if (e.has("branch")) {
        glance.branch_id = static_cast<int>(e.integer("branch", 0));
      }
      glance.offset_x_px = e.number("offset_x_px", 0.0);
      glance.offset_y_px = e.number("offset_y_px", 0.0);
      g.glances.push_back(glance);
    }
  }
  if (g.kind == GazeSourceKind::scripted && g.file.empty() && g.schedule.empty()) {
    f.issue("", "scripted gaze needs a file or a schedule");
  }
  return g;
}

json gaze_json(const GazeSource& g) {
  json out{{"source", gaze_kind_name(g.kind)}, {"noise_px", g.noise_px}};
  if (!g.file.empty()) {
    out["file"] = g.file.string();
  }
  json schedule = json::array();
  for (const auto& s : g.schedule) {
    schedule.push_back({{"from_y_mm", s.from_y_mm}, {"branch", s.branch_id}});
  }
  out["schedule"] = schedule;
  json glances = json::array();
  for (const auto& gl : g.glances) {
    json jg{{"start_tick", gl.start_tick},
            {"duration_ticks", gl.duration_ticks},
            {"offset_x_px", gl.offset_x_px},
            {"offset_y_px", gl.offset_y_px}};
    if (gl.branch_id) {
      jg["branch"] = *gl.branch_id;
    }
    glances.push_back(std::move(jg));
  }
  out["glances"] = glances;
  return out;
}

template <typename Fn>
void guarded(std::vector<std::string>& issues, const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    issues.push_back(path + ": " + e.what());
  }
}

}  // namespace

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  std::vector<std::string> issues;
  Fields top(&doc, "", issues);
  Scenario s;

  s.schema_version = static_cast<int>(top.integer("schema_version", -1));
  if (s.schema_version != kScenarioSchemaVersion) {
    issues.push_back("schema_version: expected " + std::to_string(kScenarioSchemaVersion));
  }
  s.name = top.text("name", "");
  s.seed = top.unsigned_integer("seed", 0);
  s.duration_ticks = top.integer("duration_ticks", 0, [](auto v) { return v >= 0; }, "non-negative");
  s.tick_rate_hz = top.number("tick_rate_hz", 30.0, positive, "positive");

  const Fields geom = top.object("geometry");
  s.geometry.width_px = static_cast<int>(geom.integer("width_px", 256, [](auto v) { return v > 0; }, "positive"));
  s.geometry.depth_px = static_cast<int>(geom.integer("depth_px", 256, [](auto v) { return v > 0; }, "positive"));
  s.geometry.pixel_pitch = geom.number("pixel_pitch", 0.15, positive, "positive");

  if (!top.has("phantom")) {
    issues.emplace_back("phantom: is required");
  }
  const Fields phantom = top.object("phantom");
  if (!phantom.has("surface")) {
    issues.emplace_back("phantom.surface: is required");
  }
  guarded(issues, "phantom.surface", [&] { s.phantom.surface = read_surface(phantom.object("surface")); });
  s.phantom.tree = read_tree(phantom);
  if (issues.empty()) {
    for (auto& issue : check_phantom(s.phantom)) {
      issues.push_back("phantom: " + issue);
    }
  }

  const Fields imaging = top.object("imaging");
  s.render.base_intensity = imaging.number("base_intensity", s.render.base_intensity, positive, "positive");
  s.render.attenuation_per_mm = imaging.number("attenuation_per_mm", s.render.attenuation_per_mm, non_negative,
                                               "non-negative");
  s.render.speckle = imaging.number("speckle", s.render.speckle, unit_interval, "in [0, 1]");
  s.render.lumen_gain = imaging.number("lumen_gain", s.render.lumen_gain, unit_interval, "in [0, 1]");
  s.render.shadow_gain = imaging.number("shadow_gain", s.render.shadow_gain, unit_interval, "in [0, 1]");
  s.render.reverberation_mm = imaging.number("reverberation_mm", s.render.reverberation_mm, positive, "positive");

  s.heatmap = read_heatmap(top.object("heatmap"), s.heatmap);

  const Fields intent = top.object("intention");
  s.intention.window = static_cast<int>(intent.integer("window", 64, [](auto v) { return v >= 1; }, "at least 1"));
  s.intention.switch_dwell =
      static_cast<int>(intent.integer("switch_dwell", 32, [](auto v) { return v >= 1; }, "at least 1"));
  s.intention.gaze_weight = intent.number("gaze_weight", 0.7, unit_interval, "in [0, 1]");
  s.intention.history_weight = intent.number("history_weight", 0.3, unit_interval, "in [0, 1]");
  s.intention.dilation_px =
      static_cast<int>(intent.integer("dilation_px", 8, [](auto v) { return v >= 0; }, "non-negative"));
  s.intention.heatmap = read_heatmap(intent.object("heatmap"), s.heatmap);
  guarded(issues, "intention", [&] { s.intention.validate(); });

  if (s.geometry.pixel_pitch > 0.0) {
    s.segmentation = SegmentationParams::for_geometry(s.geometry);
  }
  const Fields seg = top.object("segmentation");
  auto& sp = s.segmentation;
  sp.confidence_gate = seg.number("confidence_gate", sp.confidence_gate, unit_interval, "in [0, 1]");
  sp.smoothing = static_cast<int>(seg.integer("smoothing", sp.smoothing, [](auto v) { return v >= 1; }, "at least 1"));
  sp.dark_ratio = seg.number("dark_ratio", sp.dark_ratio, positive, "positive");
  sp.min_reference = seg.number("min_reference", sp.min_reference, non_negative, "non-negative");
  sp.min_row_support =
      static_cast<int>(seg.integer("min_row_support", sp.min_row_support, [](auto v) { return v >= 1; }, "at least 1"));
  sp.morph_radius =
      static_cast<int>(seg.integer("morph_radius", sp.morph_radius, [](auto v) { return v >= 0; }, "non-negative"));
  sp.min_area = static_cast<int>(seg.integer("min_area", sp.min_area, [](auto v) { return v >= 1; }, "at least 1"));
  sp.max_area = static_cast<int>(seg.integer("max_area", sp.max_area, [](auto v) { return v >= 1; }, "at least 1"));
  if (sp.max_area < sp.min_area) {
    issues.emplace_back("segmentation.max_area: must not be below min_area");
  }
  sp.max_eccentricity = seg.number("max_eccentricity", sp.max_eccentricity, unit_interval, "in [0, 1]");
  sp.dilation_px =
      static_cast<int>(seg.integer("dilation_px", sp.dilation_px, [](auto v) { return v >= 0; }, "non-negative"));
  sp.min_selection_score = seg.number("min_selection_score", sp.min_selection_score, non_negative, "non-negative");

  const Fields ctl = top.object("control");
  auto& cp = s.control;
  cp.curvature_radius_mm = ctl.number("curvature_radius_mm", cp.curvature_radius_mm, positive, "positive");
  cp.angular_gain = ctl.number("angular_gain", cp.angular_gain, positive, "positive");
  cp.lateral_gain = ctl.number("lateral_gain", cp.lateral_gain, positive, "positive");
  cp.scan_speed = ctl.number("scan_speed", cp.scan_speed, non_negative, "non-negative");
  cp.stiffness = ctl.number("stiffness", cp.stiffness, positive, "positive");
  cp.damping = ctl.number("damping", cp.damping, positive, "positive");
  cp.target_force = ctl.number("target_force", cp.target_force, non_negative, "non-negative");
  cp.angular_deadband_mm = ctl.number("angular_deadband_mm", cp.angular_deadband_mm, non_negative, "non-negative");
  cp.lateral_deadband_mm = ctl.number("lateral_deadband_mm", cp.lateral_deadband_mm, non_negative, "non-negative");
  cp.theta_limit = ctl.number("theta_limit", cp.theta_limit, positive, "positive");
  cp.coupling_threshold_mm =
      ctl.number("coupling_threshold_mm", cp.coupling_threshold_mm, non_negative, "non-negative");
  cp.correction_enabled = ctl.boolean("correction_enabled", cp.correction_enabled);

  const Fields probe = top.object("probe");
  s.initial_probe.x = probe.number("x", 0.0);
  s.initial_probe.y = probe.number("y", 0.0);
  s.initial_probe.theta = probe.number("theta", 0.0);
  if (std::abs(s.initial_probe.theta) > cp.theta_limit) {
    issues.emplace_back("probe.theta: exceeds control.theta_limit");
  }
  if (issues.empty() && !s.phantom.surface.contains(s.initial_probe.x, s.initial_probe.y)) {
    issues.emplace_back("probe: start position outside the surface extent");
  }

  s.gaze = read_gaze(top.object("gaze"), base_dir);
  if (issues.empty()) {
    for (std::size_t i = 0; i < s.gaze.schedule.size(); ++i) {
      if (!s.phantom.tree.has_branch(s.gaze.schedule[i].branch_id)) {
        issues.push_back("gaze.schedule[" + std::to_string(i) + "].branch: unknown branch id");
      }
    }
    for (std::size_t i = 0; i < s.gaze.glances.size(); ++i) {
      const auto& b = s.gaze.glances[i].branch_id;
      if (b && !s.phantom.tree.has_branch(*b)) {
        issues.push_back("gaze.glances[" + std::to_string(i) + "].branch: unknown branch id");
      }
    }
  }

  if (!issues.empty()) {
    throw ValidationError(std::move(issues));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError({path.string() + ": cannot open scenario file"});
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({path.string() + ": " + e.what()});
  }
  return parse_scenario(doc, path.parent_path());
}

json scenario_to_json(const Scenario& s) {
  const auto& r = s.render;
  const auto& sp = s.segmentation;
  const auto& cp = s.control;
  const auto& ip = s.intention;
  return {
      {"schema_version", s.schema_version},
      {"name", s.name},
      {"seed", s.seed},
      {"duration_ticks", s.duration_ticks},
      {"tick_rate_hz", s.tick_rate_hz},
      {"geometry",
       {{"width_px", s.geometry.width_px}, {"depth_px", s.geometry.depth_px}, {"pixel_pitch", s.geometry.pixel_pitch}}},
      {"phantom", [&] {
         json p = tree_json(s.phantom.tree);
         p["surface"] = surface_json(s.phantom.surface);
         return p;
       }()},
      {"imaging",
       {{"base_intensity", r.base_intensity},
        {"attenuation_per_mm", r.attenuation_per_mm},
        {"speckle", r.speckle},
        {"lumen_gain", r.lumen_gain},
        {"shadow_gain", r.shadow_gain},
        {"reverberation_mm", r.reverberation_mm}}},
      {"heatmap", heatmap_json(s.heatmap)},
      {"intention",
       {{"window", ip.window},
        {"switch_dwell", ip.switch_dwell},
        {"gaze_weight", ip.gaze_weight},
        {"history_weight", ip.history_weight},
        {"dilation_px", ip.dilation_px},
        {"heatmap", heatmap_json(ip.heatmap)}}},
      {"segmentation",
       {{"confidence_gate", sp.confidence_gate},
        {"smoothing", sp.smoothing},
        {"dark_ratio", sp.dark_ratio},
        {"min_reference", sp.min_reference},
        {"min_row_support", sp.min_row_support},
        {"morph_radius", sp.morph_radius},
        {"min_area", sp.min_area},
        {"max_area", sp.max_area},
        {"max_eccentricity", sp.max_eccentricity},
        {"dilation_px", sp.dilation_px},
        {"min_selection_score", sp.min_selection_score}}},
      {"control",
       {{"curvature_radius_mm", cp.curvature_radius_mm},
        {"angular_gain", cp.angular_gain},
        {"lateral_gain", cp.lateral_gain},
        {"scan_speed", cp.scan_speed},
        {"stiffness", cp.stiffness},
        {"damping", cp.damping},
        {"target_force", cp.target_force},
        {"angular_deadband_mm", cp.angular_deadband_mm},
        {"lateral_deadband_mm", cp.lateral_deadband_mm},
        {"theta_limit", cp.theta_limit},
        {"coupling_threshold_mm", cp.coupling_threshold_mm},
        {"correction_enabled", cp.correction_enabled}}},
      {"probe", {{"x", s.initial_probe.x}, {"y", s.initial_probe.y}, {"theta", s.initial_probe.theta}}},
      {"gaze", gaze_json(s.gaze)},
  };
}

std::string scenario_hash(const Scenario& scenario) {
  const std::string text = scenario_to_json(scenario).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sonoloop
