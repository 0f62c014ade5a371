#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "obstacle_removal/arm.hpp"
#include "obstacle_removal/bus.hpp"
#include "obstacle_removal/camera.hpp"
#include "obstacle_removal/config.hpp"
#include "obstacle_removal/digest.hpp"
#include "obstacle_removal/error.hpp"
#include "obstacle_removal/geometry.hpp"
#include "obstacle_removal/scene.hpp"
#include "obstacle_removal/segmentation.hpp"

namespace obstacle_removal {

enum class PipelineState { Driving, Stopping, Picking, Resuming, Done };

inline std::string_view to_string(PipelineState s) {
  switch (s) {
    case PipelineState::Driving: return "Driving";
    case PipelineState::Stopping: return "Stopping";
    case PipelineState::Picking: return "Picking";
    case PipelineState::Resuming: return "Resuming";
    case PipelineState::Done: return "Done";
  }
  return "?";
}

/// Pipeline stages a failure can be charged to (the columns of the failure
/// table).
enum class Module { Camera, ContextAwareness, GeometryDescriptor, RoboticArm };

inline std::string_view to_string(Module m) {
  switch (m) {
    case Module::Camera: return "Camera";
    case Module::ContextAwareness: return "ContextAwareness";
    case Module::GeometryDescriptor: return "GeometryDescriptor";
    case Module::RoboticArm: return "RoboticArm";
  }
  return "?";
}

using FailureAttribution = std::vector<Module>;  // sorted, unique

/// Per-attempt facts measured against simulation ground truth.
struct AttemptDiagnostics {
  PickOutcome outcome = PickOutcome::Success;
  double depth_error = 0.0;   // median (measured - true) depth over the object's true mask
  double mask_iou = 1.0;      // predicted vs true mask of the object's class
  double center_error = 0.0;  // |target center - true top center|, arm frame
  double yaw_error = 0.0;
};

struct AttributionThresholds {
  double d_tol = 0.015;
  double theta_tol = 10.0 * std::numbers::pi / 180.0;
  double tau_iou = 0.8;
};

/// Charges a failed attempt to pipeline stages. Throws Unattributable when no
/// rule fires.
inline FailureAttribution attribute_failure(const AttemptDiagnostics& d, const AttributionThresholds& th) {
  if (d.outcome == PickOutcome::Success) return {};
  FailureAttribution out;
  const bool mask_ok = d.mask_iou >= th.tau_iou;
  if (mask_ok && std::abs(d.depth_error) > th.d_tol) out.push_back(Module::Camera);
  if (!mask_ok) out.push_back(Module::ContextAwareness);
  if (!mask_ok && d.center_error > th.d_tol) out.push_back(Module::GeometryDescriptor);
  if (d.outcome == PickOutcome::BoundaryCollision && mask_ok && d.center_error <= th.d_tol &&
      d.yaw_error <= th.theta_tol) {
    out.push_back(Module::RoboticArm);
  }
  if (out.empty()) {
    throw Error(ErrorCode::Unattributable, std::string(to_string(d.outcome)) + " with no stage at fault");
  }
  return out;
}

struct AttemptRecord {
  std::string id;
  ObjectClass object_class = ObjectClass::Brick;
  PickOutcome outcome = PickOutcome::Success;
  FailureAttribution attribution;
  bool unattributable = false;
  double start_time = 0.0;
  double elapsed = 0.0;
  double horizontal_distance = 0.0;
  AttemptDiagnostics diagnostics;
  std::vector<PhaseSpan> trace;
};

struct RunReport {
  std::uint64_t seed = 0;
  int attempted = 0;
  int succeeded = 0;
  std::vector<AttemptRecord> records;
  std::vector<std::string> notes;
  double max_perception_latency = 0.0;
  double sim_duration = 0.0;
  std::uint64_t frames = 0;
};

struct VelocitySegment {
  double t0 = 0.0;
  double t1 = 0.0;
  double speed = 0.0;
};

struct StateChange {
  double time = 0.0;
  PipelineState state = PipelineState::Driving;
};

/// The integrated obstacle-removal loop: camera -> segmentation -> geometry
/// -> control -> arm, driven by a simulated clock. Single-threaded; step()
/// is the only mutator.
class Pipeline {
 public:
  explicit Pipeline(SimulationConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    world_.scene = cfg_.initial_scene();
    initial_count_ = world_.scene.objects.size();
    path_length_ = cfg_.ugv.path_length();
    direction_ = (cfg_.ugv.end - cfg_.ugv.start) / path_length_;
    cam_to_arm_ = camera_to_arm(world_.scene);
    robot_to_arm_ = robot_to_arm(world_.scene);
    state_trace_.push_back({0.0, state_});
  }

  PipelineState state() const noexcept { return state_; }
  bool done() const noexcept { return state_ == PipelineState::Done; }
  const WorldState& world() const noexcept { return world_; }
  const MessageBus& bus() const noexcept { return bus_; }
  const SimulationConfig& config() const noexcept { return cfg_; }
  const RigidTransform& camera_to_arm_transform() const noexcept { return cam_to_arm_; }
  const std::vector<VelocitySegment>& velocity_trace() const noexcept { return velocity_; }
  const std::vector<StateChange>& state_trace() const noexcept { return state_trace_; }
  const std::vector<AttemptRecord>& attempts() const noexcept { return records_; }
  std::size_t initial_object_count() const noexcept { return initial_count_; }

  /// Advances the clock by dt (0 < dt <= frame period). Steps after Done are
  /// absorbed.
  void step(double dt) {
    if (!(dt > 0.0) || dt > cfg_.frame_period * (1.0 + 1e-9)) {
      throw Error(ErrorCode::InvalidArgument, "dt must lie in (0, frame_period]");
    }
    if (done()) return;
    const double t_end = world_.sim_time + dt;
    while (!done()) {
      if (state_ == PipelineState::Picking) {
        const double t_event = pick_->result.trace[pick_->next_phase].end;
        if (t_event >= t_end) break;
        handle_pick_event();
      } else {
        const double tf = frame_time(next_frame_);
        if (tf >= t_end) break;
        handle_frame(tf);
      }
    }
    advance_motion(t_end);
    world_.sim_time = std::max(world_.sim_time, t_end);
  }

  /// Steps at the frame period until Done.
  void run() {
    const double budget = path_length_ / cfg_.ugv.speed +
                          static_cast<double>(initial_count_ + 1) * (total_pick_time() + 10.0) + 60.0;
    while (!done()) {
      if (world_.sim_time > budget) {
        throw Error(ErrorCode::InvalidArgument, "simulation did not terminate within its time budget");
      }
      step(cfg_.frame_period);
    }
  }

  RunReport report() const {
    RunReport r;
    r.seed = cfg_.seed;
    r.records = records_;
    r.attempted = static_cast<int>(records_.size());
    r.succeeded = static_cast<int>(std::count_if(records_.begin(), records_.end(), [](const AttemptRecord& a) {
      return a.outcome == PickOutcome::Success;
    }));
    r.notes = notes_;
    for (const auto& o : cfg_.objects) {
      if (!attempted_.count(o.id())) r.notes.push_back("not attempted: " + o.id());
    }
    r.max_perception_latency = max_latency_;
    r.sim_duration = world_.sim_time;
    r.frames = frames_;
    return r;
  }

 private:
  struct ActivePick {
    PickResult result;
    std::size_t next_phase = 0;
    std::string object_id;  // empty for a target with no real object behind it
  };

  double frame_time(std::uint64_t k) const { return static_cast<double>(k) * cfg_.frame_period; }

  double total_pick_time() const {
    double s = 0.0;
    for (MotionPhase p : kAllPhases) s += cfg_.arm.durations[p];
    return s;
  }

  void set_state(PipelineState s, double t) {
    state_ = s;
    state_trace_.push_back({t, s});
  }

  void push_velocity(double t0, double t1, double v) {
    if (t1 <= t0) return;
    if (!velocity_.empty() && velocity_.back().speed == v && velocity_.back().t1 == t0) {
      velocity_.back().t1 = t1;
    } else {
      velocity_.push_back({t0, t1, v});
    }
  }

  void update_pose() {
    const Eigen::Vector2d p = cfg_.ugv.start + traveled_ * direction_;
    world_.scene.ugv = Pose2D(p.x(), p.y(), cfg_.ugv.heading());
  }

  /// Integrates UGV motion up to t_to under the current state. Position is
  /// measured from the start of the current drive segment, so it does not
  /// depend on how the caller partitions time.
  void advance_motion(double t_to) {
    if (t_to <= motion_time_) return;
    double move_from = motion_time_, move_to = motion_time_;
    switch (state_) {
      case PipelineState::Driving: move_to = t_to; break;
      case PipelineState::Resuming:
        move_from = std::max(motion_time_, resume_time_);
        move_to = std::max(move_from, t_to);
        break;
      case PipelineState::Stopping: move_to = std::clamp(stop_time_, motion_time_, t_to); break;
      default: break;
    }
    push_velocity(motion_time_, move_from, 0.0);
    if (move_to > move_from) {
      if (!moving_) {
        moving_ = true;
        anchor_time_ = move_from;
        anchor_traveled_ = traveled_;
      }
      const double arrive = anchor_time_ + (path_length_ - anchor_traveled_) / cfg_.ugv.speed;
      if (move_to >= arrive) {
        traveled_ = path_length_;
        moving_ = false;
        push_velocity(move_from, arrive, cfg_.ugv.speed);
        push_velocity(arrive, t_to, 0.0);
        motion_time_ = t_to;
        update_pose();
        if (state_ != PipelineState::Stopping) set_state(PipelineState::Done, arrive);
        return;
      }
      traveled_ = anchor_traveled_ + cfg_.ugv.speed * (move_to - anchor_time_);
      push_velocity(move_from, move_to, cfg_.ugv.speed);
    }
    if (move_to < t_to) moving_ = false;
    push_velocity(std::max(move_to, move_from), t_to, 0.0);
    motion_time_ = t_to;
    update_pose();
  }

  void handle_frame(double tf) {
    advance_motion(tf);
    if (done()) return;
    const std::uint64_t k = next_frame_++;
    if (state_ == PipelineState::Stopping && tf < stop_time_) return;  // still braking
    if (state_ == PipelineState::Resuming) {
      if (tf < resume_time_) return;
      set_state(PipelineState::Driving, tf);
    }
    perceive(k, tf);
  }

  void perceive(std::uint64_t k, double tf) {
    const Scene& scene = world_.scene;
    const RenderedFrame gt = render(scene, cfg_.intrinsics);
    DepthImage depth = apply_noise(gt.depth, cfg_.noise, mix_seed(cfg_.seed, 2 * k));
    std::vector<std::string> ids;
    for (const auto& o : scene.objects) ids.push_back(o.id());
    for (const auto& [id, bias] : cfg_.object_depth_bias) {
      const auto it = std::find(ids.begin(), ids.end(), id);
      if (it != ids.end()) apply_object_bias(depth, gt.instances, static_cast<std::int32_t>(it - ids.begin()), bias);
    }
    ++frames_;

    CameraFramePayload cam;
    cam.frame = k;
    cam.ugv = scene.ugv;
    {
      Fnv1a64 h;
      h.update(depth.data());
      cam.depth_digest = h.hex();
      Fnv1a64 l;
      l.update(gt.labels.data());
      cam.label_digest = l.hex();
    }
    if (cfg_.retain_frames) {
      cam.depth = std::make_shared<const RunLengthImage<double>>(depth);
      cam.labels = std::make_shared<const RunLengthImage<Label>>(gt.labels);
    }
    const std::uint64_t frame_seq = bus_.next_seq(Topic::CameraFrames);
    bus_.emit(Topic::CameraFrames, tf, std::move(cam));

    CorruptionSpec active;
    for (const auto& op : cfg_.corruptions.ops) {
      if (const auto* cut = std::get_if<CutBand>(&op)) {
        const auto it = std::find(ids.begin(), ids.end(), cut->target);
        if (it == ids.end()) continue;
        const auto idx = static_cast<std::int32_t>(it - ids.begin());
        if (std::find(gt.instances.data().begin(), gt.instances.data().end(), idx) == gt.instances.data().end()) {
          continue;  // target not in view this frame
        }
      }
      active.ops.push_back(op);
    }
    const InstanceLookup lookup{&gt.instances, ids};
    const SegmentationResult seg =
        segment(gt.labels, active, mix_seed(cfg_.seed, 2 * k + 1), &lookup, cfg_.segmentation_latency);
    SegmentationPayload segp;
    segp.frame = k;
    segp.latency = seg.latency;
    {
      Fnv1a64 h;
      h.update(seg.labels.data());
      segp.label_digest = h.hex();
    }
    if (cfg_.retain_frames) segp.labels = std::make_shared<const RunLengthImage<Label>>(seg.labels);
    bus_.emit(Topic::SegmentationMasks, tf + seg.latency, std::move(segp));

    const double latency = seg.latency + cfg_.geometry_latency;
    max_latency_ = std::max(max_latency_, latency);
    const double t_dec = tf + latency;
    auto candidates = describe_targets(seg.labels, depth, cfg_.intrinsics, cam_to_arm_, cfg_.arm.envelope, frame_seq);
    bus_.emit(Topic::GraspTargets, t_dec, GraspTargetsPayload{k, candidates});

    std::vector<const TargetCandidate*> eligible;
    for (const auto& c : candidates) {
      if (!c.clipped && c.reachable && !already_attempted(c, gt.instances, ids)) eligible.push_back(&c);
    }
    std::stable_sort(eligible.begin(), eligible.end(), [](const TargetCandidate* a, const TargetCandidate* b) {
      return std::tuple(a->horizontal_distance, a->seed.v, a->seed.u) <
             std::tuple(b->horizontal_distance, b->seed.v, b->seed.u);
    });

    if (state_ == PipelineState::Driving) {
      if (eligible.empty()) return;
      bus_.emit(Topic::ControlStop, t_dec, ControlPayload{ControlCommand::Stop});
      stop_time_ = t_dec + cfg_.ugv.stop_latency;
      set_state(PipelineState::Stopping, t_dec);
      return;
    }
    // Halted: act on the fresh frame. A target lost while braking still
    // passes through Picking, with no arm command.
    if (eligible.empty()) {
      set_state(PipelineState::Picking, t_dec);
      notes_.push_back("target lost after halting at t=" + std::to_string(t_dec));
      resume(t_dec);
      return;
    }
    start_pick(*eligible.front(), t_dec, gt, depth, seg.labels);
  }

  bool already_attempted(const TargetCandidate& c, const InstanceImage& instances,
                         const std::vector<std::string>& ids) const {
    const std::int32_t idx = instances(c.seed.u, c.seed.v);
    if (idx >= 0) return attempted_.count(ids[static_cast<std::size_t>(idx)]) > 0;
    const Eigen::Vector2d xy = target_world_xy(c.target);
    for (const auto& p : abandoned_phantoms_) {
      if ((p - xy).norm() <= kPhantomRadius) return true;
    }
    return false;
  }

  Eigen::Vector2d target_world_xy(const GraspTarget& t) const {
    const Eigen::Vector3d robot = invert(robot_to_arm_).apply(t.center.p);
    return robot_to_world(robot, world_.scene.ugv).head<2>();
  }

  GraspTruth arm_frame_truth(const ObjectSpec& obj) const {
    const Eigen::Vector3d robot = world_to_robot({obj.pose().x, obj.pose().y, 0.0}, world_.scene.ugv);
    const Eigen::Vector3d arm = robot_to_arm_.apply(robot);
    const double yaw = normalize_angle(obj.pose().yaw - world_.scene.ugv.heading - cfg_.arm_mount.yaw);
    return {obj.with_pose({arm.x(), arm.y(), yaw}), arm.z()};
  }

  void start_pick(const TargetCandidate& cand, double t_dec, const RenderedFrame& gt, const DepthImage& depth,
                  const LabelImage& predicted) {
    bus_.emit(Topic::ArmCommands, t_dec, ArmCommandPayload{cand.target});
    const std::int32_t idx = gt.instances(cand.seed.u, cand.seed.v);

    std::optional<GraspTruth> truth;
    AttemptRecord rec;
    if (idx >= 0) {
      const ObjectSpec& obj = world_.scene.objects[static_cast<std::size_t>(idx)];
      truth = arm_frame_truth(obj);
      rec.id = obj.id();
      rec.object_class = obj.object_class();

      std::vector<Pixel> pixels;
      std::vector<double> depth_errors;
      for (int v = 0; v < gt.instances.height(); ++v) {
        for (int u = 0; u < gt.instances.width(); ++u) {
          if (gt.instances(u, v) != idx) continue;
          pixels.push_back({u, v});
          if (is_valid_depth(depth(u, v))) depth_errors.push_back(depth(u, v) - gt.depth(u, v));
        }
      }
      rec.diagnostics.mask_iou = mask_iou(predicted, gt.labels, pixels, to_label(obj.object_class()));
      rec.diagnostics.depth_error =
          depth_errors.empty() ? std::numeric_limits<double>::infinity() : median(depth_errors);
      rec.diagnostics.center_error = (cand.target.center.p - truth->top_center()).norm();
      rec.diagnostics.yaw_error = axis_angle_error(cand.target.yaw, truth->object.pose().yaw);
    }

    PickResult result = execute_pick(cand.target, truth, cfg_.arm, t_dec);
    rec.outcome = result.outcome;
    rec.start_time = t_dec;
    rec.elapsed = result.elapsed;
    rec.horizontal_distance = cand.horizontal_distance;
    rec.trace = result.trace;
    rec.diagnostics.outcome = result.outcome;

    if (idx >= 0) {
      try {
        rec.attribution = attribute_failure(rec.diagnostics, {cfg_.arm.d_tol, cfg_.arm.theta_tol, cfg_.tau_iou});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Unattributable) throw;
        rec.unattributable = true;
        notes_.push_back("unattributable failure: " + rec.id);
      }
      attempted_.insert(rec.id);
      records_.push_back(rec);
    } else {
      abandoned_phantoms_.push_back(target_world_xy(cand.target));
      notes_.push_back("pick attempted on a mask with no object behind it");
    }

    const bool has_phases = !result.trace.empty();
    pick_ = ActivePick{std::move(result), 0, rec.id};
    set_state(PipelineState::Picking, t_dec);
    if (!has_phases) {
      bus_.emit(Topic::ArmStatus, t_dec,
                ArmStatusPayload{MotionPhase::Home, t_dec, t_dec, pick_->result.outcome});
      finish_pick(t_dec);
    }
  }

  void handle_pick_event() {
    const auto& trace = pick_->result.trace;
    const PhaseSpan span = trace[pick_->next_phase];
    advance_motion(span.end);
    const bool last = pick_->next_phase + 1 == trace.size();
    ArmStatusPayload status{span.phase, span.start, span.end, std::nullopt};
    if (last) status.outcome = pick_->result.outcome;
    bus_.emit(Topic::ArmStatus, span.end, status);
    if (pick_->result.success()) {
      if (span.phase == MotionPhase::Grasp) gripper_.held = pick_->object_id;
      if (span.phase == MotionPhase::Release) {
        world_.sim_time = std::max(world_.sim_time, span.end);
        world_ = place(gripper_, cfg_.arm.drop_pose, std::move(world_));
      }
    }
    ++pick_->next_phase;
    if (last) finish_pick(span.end);
  }

  void finish_pick(double t) {
    pick_.reset();
    advance_motion(t);
    resume(t);
  }

  void resume(double t) {
    bus_.emit(Topic::ControlStop, t, ControlPayload{ControlCommand::Resume});
    advance_motion(t);
    resume_time_ = t;
    set_state(PipelineState::Resuming, t);
    next_frame_ = std::max(next_frame_, static_cast<std::uint64_t>(std::ceil(t / cfg_.frame_period - 1e-9)));
  }

  static constexpr double kPhantomRadius = 0.1;

  SimulationConfig cfg_;
  WorldState world_;
  MessageBus bus_;
  PipelineState state_ = PipelineState::Driving;
  std::size_t initial_count_ = 0;
  double path_length_ = 0.0;
  Eigen::Vector2d direction_ = Eigen::Vector2d::UnitX();
  double traveled_ = 0.0;
  bool moving_ = false;
  double anchor_time_ = 0.0;
  double anchor_traveled_ = 0.0;
  double motion_time_ = 0.0;
  double stop_time_ = 0.0;
  double resume_time_ = 0.0;
  std::uint64_t next_frame_ = 0;
  std::uint64_t frames_ = 0;
  double max_latency_ = 0.0;
  RigidTransform cam_to_arm_;
  RigidTransform robot_to_arm_;
  std::optional<ActivePick> pick_;
  Gripper gripper_;
  std::set<std::string> attempted_;
  std::vector<Eigen::Vector2d> abandoned_phantoms_;
  std::vector<AttemptRecord> records_;
  std::vector<std::string> notes_;
  std::vector<VelocitySegment> velocity_;
  std::vector<StateChange> state_trace_;
};

inline RunReport run_scenario(const SimulationConfig& cfg) {
  Pipeline p(cfg);
  p.run();
  return p.report();
}

/// Re-runs the geometry stage over a retained log and returns the
/// GraspTargets payloads it produces, in frame order.
inline std::vector<GraspTargetsPayload> replay_geometry(const MessageBus& bus, const SimulationConfig& cfg) {
  const auto frames = bus.messages(Topic::CameraFrames);
  const auto masks = bus.messages(Topic::SegmentationMasks);
  if (frames.size() != masks.size()) {
    throw Error(ErrorCode::InvalidArgument, "log has unmatched camera and segmentation messages");
  }
  const RigidTransform cam_to_arm = camera_to_arm(cfg.initial_scene());
  std::vector<GraspTargetsPayload> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& cam = std::get<CameraFramePayload>(frames[i]->payload);
    const auto& seg = std::get<SegmentationPayload>(masks[i]->payload);
    if (!cam.depth || !seg.labels) {
      throw Error(ErrorCode::InvalidArgument, "log was recorded without retained frames");
    }
    out.push_back({cam.frame, describe_targets(seg.labels->decode(), cam.depth->decode(), cfg.intrinsics,
                                               cam_to_arm, cfg.arm.envelope, frames[i]->seq)});
  }
  return out;
}

}  // namespace obstacle_removal
