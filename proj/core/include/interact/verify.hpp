#pragma once

#include <string>
#include <vector>

#include "interact/pose.hpp"
#include "interact/rng.hpp"

namespace interact {

/// One self-check outcome: the measured value against its pinned threshold.
struct VerifyResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Random but valid scene window (coordinates in roughly a 2 m cube), for
/// property tests and self-checks.
SceneWindow make_random_window(Rng& rng, AgentKind partner_kind, int horizon = 15,
                               bool with_target = true);

/// Finite-difference audits of every differentiable op plus the full forward
/// pass with the combined prediction/alignment loss (64-bit, h = 1e-5).
std::vector<VerifyResult> verify_gradients();

/// DCT roundtrip and norm preservation over random channels.
std::vector<VerifyResult> verify_dct(int channels = 1000, int length = 15);

/// predict(window + v) vs predict(window) + v at 32-bit over random windows.
std::vector<VerifyResult> verify_translation_equivariance(int windows = 100);

/// Bit-invariance of the marginal variants to partner perturbations.
std::vector<VerifyResult> verify_variant_contracts(int windows = 100);

/// All of the above, in order.
std::vector<VerifyResult> verify_all();

}  // namespace interact
