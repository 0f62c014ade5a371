#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "obstacle_removal/bus.hpp"
#include "obstacle_removal/config.hpp"
#include "obstacle_removal/digest.hpp"
#include "obstacle_removal/error.hpp"
#include "obstacle_removal/geometry.hpp"
#include "obstacle_removal/orchestrator.hpp"
#include "obstacle_removal/pnm.hpp"

namespace obstacle_removal {

using Json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::InvalidConfig, path + ": " + message);
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

inline int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    config_error(path, "integer out of range");
  }
  return static_cast<int>(v);
}

inline std::uint64_t as_u64(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) config_error(path, "must be >= 0");
  config_error(path, "expected an integer");
}

inline bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) config_error(path, "expected true or false");
  return j.get<bool>();
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) config_error(path, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = as_number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  return v;
}

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be rejected.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) config_error(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = find(key);
    if (v == nullptr) config_error(path(key), "is required");
    return *v;
  }

  template <typename F>
  void optional(const std::string& key, F&& f) {
    if (const Json* v = find(key)) f(*v, path(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) config_error(path(item.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Label parse_label(const Json& j, const std::string& path) {
  const std::string s = as_string(j, path);
  if (s == "brick") return Label::Brick;
  if (s == "pipe") return Label::Pipe;
  if (s == "unlabeled") return Label::Unlabeled;
  config_error(path, "expected \"brick\", \"pipe\" or \"unlabeled\"");
}

inline std::string_view label_name(Label l) {
  switch (l) {
    case Label::Brick: return "brick";
    case Label::Pipe: return "pipe";
    default: return "unlabeled";
  }
}

inline ObjectSpec parse_object(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string id = as_string(r.require("id"), r.path("id"));
  if (id.empty()) config_error(r.path("id"), "must not be empty");
  const std::string cls = as_string(r.require("class"), r.path("class"));
  ObjectReader dims(r.require("dims"), r.path("dims"));
  ObjectReader pose_r(r.require("pose"), r.path("pose"));
  ObjectPose pose;
  pose.x = as_number(pose_r.require("x"), pose_r.path("x"));
  pose.y = as_number(pose_r.require("y"), pose_r.path("y"));
  pose.yaw = as_number(pose_r.require("yaw"), pose_r.path("yaw"));
  pose_r.finish();

  ObjectSpec::Dims d;
  if (cls == "brick") {
    BrickDims b;
    b.length = as_number(dims.require("length"), dims.path("length"));
    b.width = as_number(dims.require("width"), dims.path("width"));
    b.height = as_number(dims.require("height"), dims.path("height"));
    d = b;
  } else if (cls == "pipe") {
    PipeDims p;
    p.radius = as_number(dims.require("radius"), dims.path("radius"));
    p.length = as_number(dims.require("length"), dims.path("length"));
    d = p;
  } else {
    config_error(r.path("class"), "expected \"brick\" or \"pipe\"");
  }
  dims.finish();
  r.finish();
  try {
    return ObjectSpec(id, d, pose);
  } catch (const Error& e) {
    config_error(r.path("dims"), e.what());
  }
}

inline CorruptionOp parse_corruption(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string op = as_string(r.require("op"), r.path("op"));
  CorruptionOp out;
  if (op == "erode") {
    out = Erode{as_int(r.require("radius"), r.path("radius"))};
  } else if (op == "holes") {
    Holes h;
    h.fraction = as_number(r.require("fraction"), r.path("fraction"));
    r.optional("seed", [&](const Json& v, const std::string& p) { h.seed = as_u64(v, p); });
    out = h;
  } else if (op == "cut_band") {
    CutBand c;
    c.target = as_string(r.require("target"), r.path("target"));
    c.width = as_number(r.require("width"), r.path("width"));
    out = c;
  } else if (op == "relabel") {
    Relabel rl;
    const Json& region = r.require("region");
    const std::string rp = r.path("region");
    if (!region.is_array() || region.size() != 4) config_error(rp, "expected [u0, v0, u1, v1]");
    rl.region = {as_int(region[0], rp + "[0]"), as_int(region[1], rp + "[1]"), as_int(region[2], rp + "[2]"),
                 as_int(region[3], rp + "[3]")};
    rl.label = parse_label(r.require("label"), r.path("label"));
    out = rl;
  } else {
    config_error(r.path("op"), "expected one of erode, holes, cut_band, relabel");
  }
  r.finish();
  return out;
}

}  // namespace detail

/// Strict scenario parser: unknown keys, wrong types and out-of-range values
/// all throw InvalidConfig naming the offending field. Absent keys keep
/// their defaults.
inline SimulationConfig parse_scenario(const Json& root) {
  using namespace detail;
  SimulationConfig cfg;
  ObjectReader r(root, "");
  r.optional("seed", [&](const Json& v, const std::string& p) { cfg.seed = as_u64(v, p); });
  r.optional("frame_period", [&](const Json& v, const std::string& p) { cfg.frame_period = as_number(v, p); });
  r.optional("segmentation_latency",
             [&](const Json& v, const std::string& p) { cfg.segmentation_latency = as_number(v, p); });
  r.optional("geometry_latency", [&](const Json& v, const std::string& p) { cfg.geometry_latency = as_number(v, p); });
  r.optional("tau_iou", [&](const Json& v, const std::string& p) { cfg.tau_iou = as_number(v, p); });

  r.optional("camera", [&](const Json& v, const std::string& p) {
    ObjectReader c(v, p);
    auto& k = cfg.intrinsics;
    c.optional("width", [&](const Json& x, const std::string& q) { k.width = as_int(x, q); });
    c.optional("height", [&](const Json& x, const std::string& q) { k.height = as_int(x, q); });
    c.optional("fx", [&](const Json& x, const std::string& q) { k.fx = as_number(x, q); });
    c.optional("fy", [&](const Json& x, const std::string& q) { k.fy = as_number(x, q); });
    c.optional("cx", [&](const Json& x, const std::string& q) { k.cx = as_number(x, q); });
    c.optional("cy", [&](const Json& x, const std::string& q) { k.cy = as_number(x, q); });
    c.optional("height_m", [&](const Json& x, const std::string& q) { cfg.camera.position.z() = as_number(x, q); });
    c.optional("mount", [&](const Json& x, const std::string& q) {
      cfg.camera.position.head<2>() = as_vector<2>(x, q);
    });
    c.optional("noise", [&](const Json& x, const std::string& q) {
      ObjectReader n(x, q);
      n.optional("sigma", [&](const Json& y, const std::string& s) { cfg.noise.sigma = as_number(y, s); });
      n.optional("bias", [&](const Json& y, const std::string& s) { cfg.noise.bias = as_number(y, s); });
      n.optional("dropout_prob",
                 [&](const Json& y, const std::string& s) { cfg.noise.dropout_prob = as_number(y, s); });
      n.optional("object_bias", [&](const Json& y, const std::string& s) {
        if (!y.is_object()) config_error(s, "expected an object of id: meters");
        for (const auto& item : y.items()) {
          cfg.object_depth_bias[item.key()] = as_number(item.value(), s + "." + item.key());
        }
      });
      n.finish();
    });
    c.finish();
  });

  r.optional("arm", [&](const Json& v, const std::string& p) {
    ObjectReader a(v, p);
    auto& arm = cfg.arm;
    a.optional("r_min", [&](const Json& x, const std::string& q) { arm.envelope.r_min = as_number(x, q); });
    a.optional("r_max", [&](const Json& x, const std::string& q) { arm.envelope.r_max = as_number(x, q); });
    a.optional("z_min", [&](const Json& x, const std::string& q) { arm.envelope.z_min = as_number(x, q); });
    a.optional("z_max", [&](const Json& x, const std::string& q) { arm.envelope.z_max = as_number(x, q); });
    a.optional("gripper_max_opening",
               [&](const Json& x, const std::string& q) { arm.gripper_max_opening = as_number(x, q); });
    a.optional("d_tol", [&](const Json& x, const std::string& q) { arm.d_tol = as_number(x, q); });
    a.optional("theta_tol", [&](const Json& x, const std::string& q) { arm.theta_tol = as_number(x, q); });
    a.optional("boundary_margin", [&](const Json& x, const std::string& q) { arm.boundary_margin = as_number(x, q); });
    a.optional("adaptive_order", [&](const Json& x, const std::string& q) { arm.adaptive_order = as_bool(x, q); });
    a.optional("drop_pose", [&](const Json& x, const std::string& q) { arm.drop_pose = as_vector<3>(x, q); });
    a.optional("phase_durations", [&](const Json& x, const std::string& q) {
      ObjectReader d(x, q);
      for (MotionPhase ph : kAllPhases) {
        const std::string name(to_string(ph));
        d.optional(name, [&](const Json& y, const std::string& s) { arm.durations[ph] = as_number(y, s); });
      }
      d.finish();
    });
    a.optional("base", [&](const Json& x, const std::string& q) {
      const Eigen::Vector4d b = as_vector<4>(x, q);
      cfg.arm_mount.position = b.head<3>();
      cfg.arm_mount.yaw = b[3];
    });
    a.finish();
  });

  r.optional("ugv", [&](const Json& v, const std::string& p) {
    ObjectReader u(v, p);
    u.optional("start", [&](const Json& x, const std::string& q) { cfg.ugv.start = as_vector<2>(x, q); });
    u.optional("end", [&](const Json& x, const std::string& q) { cfg.ugv.end = as_vector<2>(x, q); });
    u.optional("speed", [&](const Json& x, const std::string& q) { cfg.ugv.speed = as_number(x, q); });
    u.optional("stop_latency", [&](const Json& x, const std::string& q) { cfg.ugv.stop_latency = as_number(x, q); });
    u.finish();
  });

  r.optional("drop_zone", [&](const Json& v, const std::string& p) {
    ObjectReader d(v, p);
    d.optional("min", [&](const Json& x, const std::string& q) { cfg.drop_zone.min = as_vector<2>(x, q); });
    d.optional("max", [&](const Json& x, const std::string& q) { cfg.drop_zone.max = as_vector<2>(x, q); });
    d.finish();
  });

  r.optional("objects", [&](const Json& v, const std::string& p) {
    if (!v.is_array()) config_error(p, "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      cfg.objects.push_back(parse_object(v[i], p + "[" + std::to_string(i) + "]"));
    }
  });
  r.optional("corruptions", [&](const Json& v, const std::string& p) {
    if (!v.is_array()) config_error(p, "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      cfg.corruptions.ops.push_back(parse_corruption(v[i], p + "[" + std::to_string(i) + "]"));
    }
  });
  r.finish();

  cfg.validate();
  return cfg;
}

inline SimulationConfig parse_scenario(std::istream& in) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("<file>: not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline SimulationConfig load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::InvalidConfig, file.string() + ": cannot open");
  return parse_scenario(in);
}

namespace detail {

inline Json to_json(const Eigen::Vector2d& v) { return Json::array({v.x(), v.y()}); }
inline Json to_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

/// Canonical form: every field written, fixed key order. Parsing it back
/// yields the same config.
inline Json scenario_to_json(const SimulationConfig& cfg) {
  using detail::to_json;
  Json j;
  j["seed"] = cfg.seed;
  j["frame_period"] = cfg.frame_period;
  j["segmentation_latency"] = cfg.segmentation_latency;
  j["geometry_latency"] = cfg.geometry_latency;
  j["tau_iou"] = cfg.tau_iou;

  Json cam;
  cam["width"] = cfg.intrinsics.width;
  cam["height"] = cfg.intrinsics.height;
  cam["fx"] = cfg.intrinsics.fx;
  cam["fy"] = cfg.intrinsics.fy;
  cam["cx"] = cfg.intrinsics.cx;
  cam["cy"] = cfg.intrinsics.cy;
  cam["height_m"] = cfg.camera.position.z();
  cam["mount"] = to_json(Eigen::Vector2d(cfg.camera.position.head<2>()));
  Json noise;
  noise["sigma"] = cfg.noise.sigma;
  noise["bias"] = cfg.noise.bias;
  noise["dropout_prob"] = cfg.noise.dropout_prob;
  noise["object_bias"] = Json::object();
  for (const auto& [id, b] : cfg.object_depth_bias) noise["object_bias"][id] = b;
  cam["noise"] = noise;
  j["camera"] = cam;

  Json arm;
  const auto& a = cfg.arm;
  arm["r_min"] = a.envelope.r_min;
  arm["r_max"] = a.envelope.r_max;
  arm["z_min"] = a.envelope.z_min;
  arm["z_max"] = a.envelope.z_max;
  arm["gripper_max_opening"] = a.gripper_max_opening;
  arm["d_tol"] = a.d_tol;
  arm["theta_tol"] = a.theta_tol;
  arm["boundary_margin"] = a.boundary_margin;
  arm["adaptive_order"] = a.adaptive_order;
  Json durations;
  for (MotionPhase p : kAllPhases) durations[std::string(to_string(p))] = a.durations[p];
  arm["phase_durations"] = durations;
  arm["drop_pose"] = to_json(a.drop_pose);
  const auto& m = cfg.arm_mount;
  arm["base"] = Json::array({m.position.x(), m.position.y(), m.position.z(), m.yaw});
  j["arm"] = arm;

  j["ugv"] = {{"start", to_json(cfg.ugv.start)},
              {"end", to_json(cfg.ugv.end)},
              {"speed", cfg.ugv.speed},
              {"stop_latency", cfg.ugv.stop_latency}};
  j["drop_zone"] = {{"min", to_json(cfg.drop_zone.min)}, {"max", to_json(cfg.drop_zone.max)}};

  Json objects = Json::array();
  for (const auto& o : cfg.objects) {
    Json obj;
    obj["id"] = o.id();
    obj["class"] = std::string(to_string(o.object_class()));
    if (const auto* b = std::get_if<BrickDims>(&o.dims())) {
      obj["dims"] = {{"length", b->length}, {"width", b->width}, {"height", b->height}};
    } else {
      const auto& p = std::get<PipeDims>(o.dims());
      obj["dims"] = {{"radius", p.radius}, {"length", p.length}};
    }
    obj["pose"] = {{"x", o.pose().x}, {"y", o.pose().y}, {"yaw", o.pose().yaw}};
    objects.push_back(obj);
  }
  j["objects"] = objects;

  Json corruptions = Json::array();
  for (const auto& op : cfg.corruptions.ops) {
    Json c;
    if (const auto* e = std::get_if<Erode>(&op)) {
      c = {{"op", "erode"}, {"radius", e->radius}};
    } else if (const auto* h = std::get_if<Holes>(&op)) {
      c = {{"op", "holes"}, {"fraction", h->fraction}, {"seed", h->seed}};
    } else if (const auto* cb = std::get_if<CutBand>(&op)) {
      c = {{"op", "cut_band"}, {"target", cb->target}, {"width", cb->width}};
    } else {
      const auto& rl = std::get<Relabel>(op);
      c = {{"op", "relabel"},
           {"region", Json::array({rl.region.u0, rl.region.v0, rl.region.u1, rl.region.v1})},
           {"label", std::string(detail::label_name(rl.label))}};
    }
    corruptions.push_back(c);
  }
  j["corruptions"] = corruptions;
  return j;
}

inline std::string config_digest(const SimulationConfig& cfg) {
  Fnv1a64 h;
  h.update(scenario_to_json(cfg).dump());
  return h.hex();
}

inline void write_message_log(std::ostream& os, const MessageBus& bus);

inline std::string message_log_digest(const MessageBus& bus) {
  std::ostringstream os;
  write_message_log(os, bus);
  Fnv1a64 h;
  h.update(os.str());
  return h.hex();
}

inline Json report_to_json(const RunReport& report, const SimulationConfig& cfg, const MessageBus* bus = nullptr) {
  Json j;
  j["seed"] = report.seed;
  j["config_digest"] = config_digest(cfg);
  if (bus != nullptr) j["message_log_digest"] = message_log_digest(*bus);
  j["attempted"] = report.attempted;
  j["succeeded"] = report.succeeded;
  Json records = Json::array();
  for (const auto& r : report.records) {
    Json rec;
    rec["id"] = r.id;
    rec["class"] = std::string(to_string(r.object_class));
    const bool ok = r.outcome == PickOutcome::Success;
    rec["outcome"] = ok ? "Success" : "Failure";
    rec["cause"] = ok ? Json(nullptr) : Json(std::string(to_string(r.outcome)));
    Json attribution = Json::array();
    for (Module m : r.attribution) attribution.push_back(std::string(to_string(m)));
    rec["attribution"] = attribution;
    rec["elapsed_s"] = r.elapsed;
    rec["center_error_m"] = r.diagnostics.center_error;
    rec["yaw_error_rad"] = r.diagnostics.yaw_error;
    rec["mask_iou"] = r.diagnostics.mask_iou;
    rec["depth_error_m"] = r.diagnostics.depth_error;
    rec["start_s"] = r.start_time;
    rec["horizontal_distance_m"] = r.horizontal_distance;
    rec["unattributable"] = r.unattributable;
    Json trace = Json::array();
    for (const auto& s : r.trace) {
      trace.push_back({{"phase", std::string(to_string(s.phase))}, {"start", s.start}, {"end", s.end}});
    }
    rec["phase_trace"] = trace;
    records.push_back(rec);
  }
  j["records"] = records;
  j["wall_notes"] = report.notes;
  j["max_perception_latency_s"] = report.max_perception_latency;
  j["sim_duration_s"] = report.sim_duration;
  j["frames"] = report.frames;
  j["config"] = scenario_to_json(cfg);
  return j;
}

namespace detail {

inline Json target_to_json(const GraspTarget& t) {
  return {{"center", to_json(t.center.p)},
          {"frame", std::string(to_string(t.center.frame))},
          {"yaw", t.yaw},
          {"class", std::string(to_string(t.object_class))},
          {"component_id", t.component_id},
          {"frame_seq", t.frame_seq}};
}

inline Json payload_to_json(const Payload& payload) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CameraFramePayload>) {
          return {{"frame", p.frame},
                  {"ugv", {{"x", p.ugv.x}, {"y", p.ugv.y}, {"heading", p.ugv.heading}}},
                  {"depth_digest", p.depth_digest},
                  {"label_digest", p.label_digest}};
        } else if constexpr (std::is_same_v<T, SegmentationPayload>) {
          return {{"frame", p.frame}, {"latency", p.latency}, {"label_digest", p.label_digest}};
        } else if constexpr (std::is_same_v<T, GraspTargetsPayload>) {
          Json cands = Json::array();
          for (const auto& c : p.candidates) {
            cands.push_back({{"target", target_to_json(c.target)},
                             {"area", c.area},
                             {"seed", Json::array({c.seed.u, c.seed.v})},
                             {"clipped", c.clipped},
                             {"reachable", c.reachable},
                             {"horizontal_distance", c.horizontal_distance}});
          }
          return {{"frame", p.frame}, {"candidates", cands}};
        } else if constexpr (std::is_same_v<T, ControlPayload>) {
          return {{"command", p.command == ControlCommand::Stop ? "Stop" : "Resume"}};
        } else if constexpr (std::is_same_v<T, ArmCommandPayload>) {
          return {{"target", target_to_json(p.target)}};
        } else {
          Json j = {{"phase", std::string(to_string(p.phase))}, {"start", p.start}, {"end", p.end}};
          j["outcome"] = p.outcome ? Json(std::string(to_string(*p.outcome))) : Json(nullptr);
          return j;
        }
      },
      payload);
}

}  // namespace detail

/// One envelope per line. Images travel as digests; the pixels themselves go
/// to the frame dumps.
inline void write_message_log(std::ostream& os, const MessageBus& bus) {
  for (const auto& m : bus.log()) {
    Json j;
    j["topic"] = std::string(to_string(m.topic));
    j["seq"] = m.seq;
    j["t"] = m.sim_time;
    j["payload"] = detail::payload_to_json(m.payload);
    os << j.dump() << '\n';
  }
}

/// Writes frame_NNNNN_{depth.pgm,rgb.ppm,mask.ppm} for every retained frame.
/// The rgb image is the true label rendering; mask is the segmentation.
inline std::size_t write_frame_dumps(const std::filesystem::path& dir, const MessageBus& bus) {
  std::filesystem::create_directories(dir);
  auto name = [&](std::uint64_t frame, const char* suffix) {
    std::ostringstream os;
    os << "frame_" << std::setw(5) << std::setfill('0') << frame << '_' << suffix;
    return dir / os.str();
  };
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    return out;
  };
  std::size_t written = 0;
  for (const auto* m : bus.messages(Topic::CameraFrames)) {
    const auto& cam = std::get<CameraFramePayload>(m->payload);
    if (!cam.depth || !cam.labels) continue;
    auto depth = open(name(cam.frame, "depth.pgm"));
    write_depth_pgm(depth, cam.depth->decode());
    auto rgb = open(name(cam.frame, "rgb.ppm"));
    write_label_ppm(rgb, cam.labels->decode());
    ++written;
  }
  for (const auto* m : bus.messages(Topic::SegmentationMasks)) {
    const auto& seg = std::get<SegmentationPayload>(m->payload);
    if (!seg.labels) continue;
    auto mask = open(name(seg.frame, "mask.ppm"));
    write_label_ppm(mask, seg.labels->decode());
  }
  return written;
}

/// Correspondence file: six numbers per row (camera xyz, then arm xyz),
/// whitespace separated; '#' starts a comment.
inline std::vector<Correspondence> parse_correspondences(std::istream& in) {
  std::vector<Correspondence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::vector<double> values;
    std::string token;
    while (row >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) + ": not a number: " + token);
      }
      values.push_back(v);
    }
    if (values.empty()) continue;
    if (values.size() != 6) {
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(line_no) + ": expected 6 numbers, got " + std::to_string(values.size()));
    }
    out.push_back({{values[0], values[1], values[2]}, {values[3], values[4], values[5]}});
  }
  return out;
}

inline Json transform_to_json(const RigidTransform& T, double residual) {
  Json r = Json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r.push_back(T.rotation()(i, k));
  }
  return {{"R", r}, {"t", detail::to_json(T.translation())}, {"rms_residual", residual}};
}

}  // namespace obstacle_removal
