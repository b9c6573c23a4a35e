#include "srmpc/srmpc.hpp"

#include <array>
#include <exception>
#include <optional>

#include "srmpc/error.hpp"

namespace srmpc {

namespace {

constexpr std::array<std::string_view, 4> kProvenanceNames{"policy-reference", "shifted-reference",
                                                           "braking-fallback", "policy-action"};

}  // namespace

std::string_view to_string(Provenance p) { return kProvenanceNames[static_cast<std::size_t>(p)]; }

Provenance parse_provenance(std::string_view text) {
  for (std::size_t i = 0; i < kProvenanceNames.size(); ++i) {
    if (kProvenanceNames[i] == text) return static_cast<Provenance>(i);
  }
  throw InvalidArgument("unknown provenance " + std::string(text));
}

SrmpcController::SrmpcController(OcpConfig config, Scenario scenario, std::shared_ptr<const DrivingPolicy> policy)
    : scenario_(std::move(scenario)),
      policy_(std::move(policy)),
      mpc_(std::move(config), scenario_.y_ref, scenario_.v_ref) {}

void SrmpcController::reset() {
  mpc_.reset();
  fallbacks_ = 0;
  provenance_.clear();
}

SrmpcStep SrmpcController::step(const World& world, const Observation& obs, double t0) {
  const int horizon = mpc_.config().horizon;
  const auto obstacles = predict_obstacles(world, obs, scenario_, horizon);
  SrmpcStep out;
  std::optional<Trajectory> reference;
  if (policy_) {
    try {
      reference = policy_rollout_reference(*policy_, world, scenario_, horizon, t0);
    } catch (const std::exception& e) {
      out.rollout_error = e.what();
    }
  } else {
    out.rollout_error = "no policy";
  }
  if (reference) {
    out.mpc = mpc_.step(world.ego, *reference, obstacles, t0);
    out.provenance = Provenance::PolicyReference;
  } else {
    ++fallbacks_;
    out.mpc = mpc_.step(world.ego, obstacles, t0);
    out.provenance = Provenance::ShiftedReference;
  }
  if (out.mpc.braking) out.provenance = Provenance::BrakingFallback;
  out.control = out.mpc.control;
  provenance_.push_back(out.provenance);
  return out;
}

}  // namespace srmpc
