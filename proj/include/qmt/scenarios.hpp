#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qmt/patching.hpp"

namespace qmt {

// Slit point: L=0, R=1. Screen point: bright=0, dark=1.
// Histories Lb, Ld, Rb, Rd with amplitudes 1/2, 1/2, 1/2, -1/2.
Theory gen_double_slit(bool reversed = false);

struct EprbConfig {
  std::array<double, 4> angles{};  // a, a', b, b' (Bloch angles in the x-z plane)
  Mat basis;                       // 4x4, columns are the intermediate resolution vectors
  Vec state;                       // two-qubit state, index 2*qA + qB
  bool flip_b_labels = false;      // swap u/d on the B wing
  bool allow_degenerate_basis = false;
};

EprbConfig default_eprb_config();
// Same config with the computational basis as intermediate resolution.
EprbConfig computational_basis_eprb_config();

// Points Z (intermediate label k), A, B with Z below both wings. Wing values
// encode 2*setting + outcome so that different settings give different
// restricted histories.
SettingScenario gen_eprb(const EprbConfig& cfg);

struct PrBox {
  SettingDcfs dcfs;
  CorrelationTable table;
  std::vector<Theory> theories;  // per global setting, histories (i,j) over points A, B
  Theory joint;                  // points SA, SB, A, B; 16 histories, uniform settings
  PrEventLabels labels;
  Event e_pr;
};
PrBox gen_pr_box();

struct GhzModel {
  Theory theory;  // points SA, SB, SC (x=0, y=1), A, B, C (u=0, d=1)
  GhzEventLabels labels;
  Event e_ghz;
};
GhzModel gen_ghz();

// Two-wing scenario over points Z, A, B from one |Omega| x |Omega| matrix per
// global setting; histories (k, 2*sA+i, 2*sB+j) with k slowest.
SettingScenario two_wing_scenario(std::size_t k_dim, const std::vector<Mat>& matrices, const Tolerance& tol = {});

// Classical model mu(k) mu_a(i|k) mu_b(j|k) with random local responses.
// Roughly one k in five gets zero weight to exercise the zero rule.
SettingScenario gen_random_factorizable(std::uint64_t seed, std::size_t k_dim = 4);

// PR statistics as a classical model with a single Z history.
SettingScenario gen_classical_pr_single_k();

}  // namespace qmt
