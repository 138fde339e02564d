#pragma once

#include <cstddef>
#include <optional>

#include "pendsearch/ensemble.hpp"

namespace pendsearch {

/// Eigenvalues of the strongly coupled (support, collective) 2x2 block.
struct BlockModes {
    double omega1_sq = 0.0; // upper
    double omega2_sq = 0.0; // lower
};

BlockModes block_modes(const ReducedModel& model);

/// Reduced model after diagonalizing the (support, collective) block. The
/// deviant couples to the two block modes with strengths alpha and beta, both
/// of order one; the matrix entries are -alpha/sqrt(N/tau) and
/// -beta/sqrt(N/tau).
struct RotatedModel {
    double omega1_sq = 0.0;
    double omega2_sq = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double omega_sq = 0.0;
    double mixing_angle = 0.0; // rotation angle of the block eigenbasis
    std::size_t n = 0;
    std::size_t tau = 0;

    Eigen::Matrix3d matrix() const;
    /// Undo the block rotation; reproduces the reduced frequency matrix.
    Eigen::Matrix3d unrotated() const;
};

RotatedModel rotate(const ReducedModel& model);

enum class Branch { upper, lower };

struct ResonanceDesign {
    double support_mass = 0.0;
    double support_stiffness = 0.0;
    Branch branch = Branch::upper;
    double detuning = 0.0;  // |omega_matched^2 - omega^2| of the designed reduced model
    double tolerance = 0.0; // declared detuning tolerance
};

struct DesignOptions {
    /// Forces a branch; by default the only feasible one is taken from the
    /// sign of omega^2 - omega_bar^2.
    std::optional<Branch> branch;
    /// Minimum |omega^2 - omega_bar^2|; defaults to 10x the weak coupling.
    std::optional<double> gap_min;
};

/// Solve for the support ground stiffness K (at the chosen support mass M) that
/// puts one block mode exactly on the deviant frequency.
ResonanceDesign design_support(const Ensemble& ensemble, double support_mass, DesignOptions options = {});

/// Ensemble with the support replaced by the designed one (L derived from K).
Ensemble apply_design(const Ensemble& ensemble, const ResonanceDesign& design);

/// Coupling of the deviant to the matched block mode, normalized per deviant.
double matched_coupling(const RotatedModel& rot, Branch branch);
double matched_omega_sq(const RotatedModel& rot, Branch branch);
Branch natural_branch(const RotatedModel& rot);

/// Deviant-pendulum cycles for one full energy transfer into the deviant
/// group: omega^2 sqrt(N/tau) / (2 beta_matched). A full beat (out and back)
/// is twice this.
double predict_transfer_cycles(const RotatedModel& rot, std::size_t n, std::size_t tau);
double predict_transfer_cycles(const RotatedModel& rot, std::size_t n, std::size_t tau, Branch branch);

/// Deviant oscillation period 2 pi / omega (s).
double deviant_period(const ReducedModel& model);

} // namespace pendsearch
