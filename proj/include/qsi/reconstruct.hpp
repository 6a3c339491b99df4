#pragma once

#include <map>
#include <string>
#include <vector>

#include "qsi/fringe.hpp"
#include "qsi/states.hpp"

namespace qsi {

enum class ReconstructionFlag : unsigned {
  MuClamped = 1u << 0,
  PhaseIndeterminate = 1u << 1,
  AvgIntensityClamped = 1u << 2,
};

std::vector<std::string> reconstruction_flag_names(unsigned flags);

/// A recovered state with its density matrix, applied projections and
/// first-order uncertainties.
struct ReconstructionResult {
  enum class Kind { Qubit, Qudit };
  Kind kind = Kind::Qubit;

  QubitState qubit;          // valid when kind == Qubit
  QuditPureState qudit;      // valid when kind == Qudit
  Eigen::MatrixXcd rho;
  unsigned flags = 0;
  std::map<std::string, double> sigmas;

  bool has_flag(ReconstructionFlag f) const { return (flags & static_cast<unsigned>(f)) != 0; }
  void set_flag(ReconstructionFlag f) { flags |= static_cast<unsigned>(f); }
  DensityMatrix density() const { return DensityMatrix(rho); }
};

/// Invert (phase shift, visibility, average intensity) into a possibly
/// mixed qubit: theta from the level, phi from the phase, mu from the
/// contrast with min(mu, 1) applied. Levels outside [1/4, 1/2] are clamped
/// and flagged. Near the poles the phase is reported as 0 with mu = 1 and
/// the phase-indeterminate flag. Throws ReconstructionError when the
/// estimate carries no usable slices.
ReconstructionResult invert_qubit(const FringeEstimate& est);

/// Same level-and-phase inversion with purity imposed (mu = 1).
ReconstructionResult reconstruct_pure_assumed(const FringeEstimate& est);

/// Sequential pure-qudit inversion from d-1 subspace estimates ordered
/// k = 1..d-1. Each estimate's avg_intensity must be the absolute
/// phase-averaged level of its subspace interferogram (norm applied).
/// A joint least-squares refinement over the angles replaces the
/// sequential answer whenever a clamp fired.
ReconstructionResult invert_qudit(const std::vector<FringeEstimate>& ests);

/// Entanglement entropy of the marginal recovered by invert_qubit;
/// quantifies entanglement when the global bipartite state is pure.
double entanglement_from_marginal(const FringeEstimate& est);

}  // namespace qsi
