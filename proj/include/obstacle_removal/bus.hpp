#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "obstacle_removal/arm.hpp"
#include "obstacle_removal/error.hpp"
#include "obstacle_removal/geometry.hpp"
#include "obstacle_removal/image.hpp"
#include "obstacle_removal/scene.hpp"

namespace obstacle_removal {

enum class Topic { CameraFrames, SegmentationMasks, GraspTargets, ControlStop, ArmCommands, ArmStatus };

inline constexpr std::array<Topic, 6> kAllTopics{Topic::CameraFrames, Topic::SegmentationMasks,
                                                 Topic::GraspTargets, Topic::ControlStop,
                                                 Topic::ArmCommands,  Topic::ArmStatus};

inline std::string_view to_string(Topic t) {
  switch (t) {
    case Topic::CameraFrames: return "CameraFrames";
    case Topic::SegmentationMasks: return "SegmentationMasks";
    case Topic::GraspTargets: return "GraspTargets";
    case Topic::ControlStop: return "ControlStop";
    case Topic::ArmCommands: return "ArmCommands";
    case Topic::ArmStatus: return "ArmStatus";
  }
  return "?";
}

struct CameraFramePayload {
  std::uint64_t frame = 0;
  Pose2D ugv;
  std::string depth_digest;
  std::string label_digest;  // ground-truth labels
  // Measured depth and true labels, kept only when the run retains frames.
  std::shared_ptr<const RunLengthImage<double>> depth;
  std::shared_ptr<const RunLengthImage<Label>> labels;
};

struct SegmentationPayload {
  std::uint64_t frame = 0;
  double latency = 0.0;
  std::string label_digest;
  std::shared_ptr<const RunLengthImage<Label>> labels;
};

struct GraspTargetsPayload {
  std::uint64_t frame = 0;
  std::vector<TargetCandidate> candidates;
};

enum class ControlCommand { Stop, Resume };

struct ControlPayload {
  ControlCommand command = ControlCommand::Stop;
};

struct ArmCommandPayload {
  GraspTarget target;
};

struct ArmStatusPayload {
  MotionPhase phase = MotionPhase::Home;
  double start = 0.0;
  double end = 0.0;
  std::optional<PickOutcome> outcome;  // set on the attempt's final message
};

using Payload = std::variant<CameraFramePayload, SegmentationPayload, GraspTargetsPayload,
                             ControlPayload, ArmCommandPayload, ArmStatusPayload>;

/// Topic each payload alternative belongs to (variant index order).
inline Topic topic_of(const Payload& p) { return kAllTopics[p.index()]; }

struct MessageEnvelope {
  Topic topic = Topic::CameraFrames;
  std::uint64_t seq = 0;
  double sim_time = 0.0;
  Payload payload;
};

/// In-process publish/subscribe log. Delivery is synchronous and FIFO per
/// topic; a late subscriber first receives the topic's full history.
class MessageBus {
 public:
  using Handler = std::function<void(const MessageEnvelope&)>;

  void publish(MessageEnvelope env) {
    if (topic_of(env.payload) != env.topic) {
      throw Error(ErrorCode::TopicMismatch,
                  "payload does not belong on " + std::string(to_string(env.topic)));
    }
    auto& last = last_[index(env.topic)];
    if (last && (env.seq <= last->first || env.sim_time < last->second)) {
      throw Error(ErrorCode::SequenceRegression,
                  std::string(to_string(env.topic)) + " seq " + std::to_string(env.seq));
    }
    last = std::pair{env.seq, env.sim_time};
    log_.push_back(std::move(env));
    const MessageEnvelope& stored = log_.back();
    // Handlers may publish; iterate by index over a snapshot of the count.
    auto& handlers = handlers_[index(stored.topic)];
    const std::size_t stored_index = log_.size() - 1;
    for (std::size_t i = 0, n = handlers.size(); i < n; ++i) handlers[i](log_[stored_index]);
  }

  /// Publishes with the topic's next sequence number.
  const MessageEnvelope& emit(Topic topic, double sim_time, Payload payload) {
    publish({topic, next_seq(topic), sim_time, std::move(payload)});
    return log_.back();
  }

  std::uint64_t next_seq(Topic topic) const {
    const auto& last = last_[index(topic)];
    return last ? last->first + 1 : 1;
  }

  void subscribe(Topic topic, Handler handler) {
    for (std::size_t i = 0; i < log_.size(); ++i) {
      if (log_[i].topic == topic) handler(log_[i]);
    }
    handlers_[index(topic)].push_back(std::move(handler));
  }

  const std::vector<MessageEnvelope>& log() const noexcept { return log_; }

  std::vector<const MessageEnvelope*> messages(Topic topic) const {
    std::vector<const MessageEnvelope*> out;
    for (const auto& m : log_) {
      if (m.topic == topic) out.push_back(&m);
    }
    return out;
  }

 private:
  static std::size_t index(Topic t) { return static_cast<std::size_t>(t); }

  std::vector<MessageEnvelope> log_;
  std::array<std::optional<std::pair<std::uint64_t, double>>, 6> last_;
  std::array<std::vector<Handler>, 6> handlers_;
};

}  // namespace obstacle_removal
