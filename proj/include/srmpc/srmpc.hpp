#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "srmpc/learner.hpp"
#include "srmpc/mpc.hpp"

namespace srmpc {

// Where the control of one step came from.
//   policy-reference   QP linearized about the policy rollout
//   shifted-reference  QP linearized about the shifted previous solution
//                      (the constant-velocity trajectory at the first step)
//   braking-fallback   no usable QP solution, fixed braking control
//   policy-action      the policy's mean action applied directly
enum class Provenance { PolicyReference, ShiftedReference, BrakingFallback, PolicyAction };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct SrmpcStep {
  ControlInput control;
  Provenance provenance = Provenance::ShiftedReference;
  MpcStep mpc;
  // Why the policy reference was rejected; empty when it was used.
  std::string rollout_error;
};

// LTV-MPC whose linearization reference comes from a rollout of a driving
// policy in a snapshot of the world. When the rollout fails the controller
// behaves exactly like MpcController. The policy never drives the ego
// directly: the applied control is always the QP solution or the braking
// fallback.
class SrmpcController {
 public:
  // A null policy makes every step fall back to the shifted reference.
  SrmpcController(OcpConfig config, Scenario scenario, std::shared_ptr<const DrivingPolicy> policy);

  void reset();
  SrmpcStep step(const World& world, const Observation& obs, double t0 = 0.0);

  const MpcController& mpc() const { return mpc_; }
  // Steps that could not use the policy reference.
  int fallback_count() const { return fallbacks_; }
  const std::vector<Provenance>& provenance() const { return provenance_; }

 private:
  Scenario scenario_;
  std::shared_ptr<const DrivingPolicy> policy_;
  MpcController mpc_;
  int fallbacks_ = 0;
  std::vector<Provenance> provenance_;
};

}  // namespace srmpc
