#pragma once

// Physical description of N pendulums hanging from a common support pendulum,
// and its exact (arrowhead) and reduced three-mode representations.
//
// Conventions: pendulum j carries mass mass_scale/N and stiffness
// k_j/N with k_j = mass_scale * g / length, so the total hanging mass stays
// O(1) as N grows. The support has mass M and ground stiffness
// K = (M + m/N) g / L. All quantities are SI.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pendsearch {

inline constexpr double standard_gravity = 9.81;

struct PendulumSpec {
    double mass_scale = 1.0; // m (per-pendulum mass is m/N)
    double length = 1.0;     // l

    PendulumSpec() = default;
    PendulumSpec(double mass_scale, double length);
};

/// k = m g / l.
double stiffness(const PendulumSpec& spec, double gravity);

enum class Role : unsigned char { normal, deviant };

class Ensemble {
public:
    Ensemble(std::size_t n, PendulumSpec normal, PendulumSpec deviant,
             std::vector<std::size_t> deviant_indices, double support_mass, double support_length,
             double gravity = standard_gravity);

    std::size_t n() const noexcept { return n_; }
    std::size_t tau() const noexcept { return deviant_indices_.size(); }
    const PendulumSpec& normal() const noexcept { return normal_; }
    const PendulumSpec& deviant() const noexcept { return deviant_; }
    /// Sorted, unique.
    const std::vector<std::size_t>& deviant_indices() const noexcept { return deviant_indices_; }
    double support_mass() const noexcept { return support_mass_; }
    double support_length() const noexcept { return support_length_; }
    double gravity() const noexcept { return gravity_; }

    bool is_deviant(std::size_t j) const;
    Role role(std::size_t j) const { return is_deviant(j) ? Role::deviant : Role::normal; }
    const PendulumSpec& spec_of(std::size_t j) const { return is_deviant(j) ? deviant_ : normal_; }

    /// K = (M + m/N) g / L.
    double support_stiffness() const;
    /// Support length L that realizes a given ground stiffness K.
    double length_for_stiffness(double support_stiffness) const;

    Ensemble with_deviants(std::vector<std::size_t> indices) const;
    Ensemble with_support(double support_mass, double support_length) const;
    Ensemble with_deviant_spec(PendulumSpec deviant) const;

private:
    std::size_t n_;
    PendulumSpec normal_;
    PendulumSpec deviant_;
    std::vector<std::size_t> deviant_indices_;
    double support_mass_;
    double support_length_;
    double gravity_;
};

/// Star-coupled linear system: degree of freedom 0 is the hub (support), every
/// other degree of freedom couples only to the hub. The stiffness matrix is
/// nonzero on the diagonal and in row/column 0 only.
///
/// The potential energy is  1/2 K X^2 + sum_j 1/2 d_j (x_j - r_j X)^2  with
/// d_j = stiff_diag[j] and r_j = -stiff_spoke[j-1] / d_j, which is how
/// per-pendulum energies are attributed.
struct ArrowSystem {
    std::vector<double> masses;      // size dof
    std::vector<double> stiff_diag;  // size dof
    std::vector<double> stiff_spoke; // size dof-1; entry (0, j) == (j, 0)
    std::vector<Role> roles;         // size dof-1
    double support_stiffness = 0.0;  // ground spring K of the hub

    std::size_t dof() const noexcept { return masses.size(); }
    std::size_t pendulums() const noexcept { return masses.size() - 1; }

    /// out = Kx in O(dof).
    void apply_stiffness(std::span<const double> x, std::span<double> out) const;
    /// Relative coupling ratio r_j of pendulum j (0-based pendulum index).
    double coupling_ratio(std::size_t j) const { return -stiff_spoke[j] / stiff_diag[j + 1]; }

    Eigen::MatrixXd dense_stiffness() const;
    /// M^{-1/2} K M^{-1/2}; its eigenvalues are the squared mode frequencies.
    Eigen::MatrixXd dense_frequency_matrix() const;
    /// Upper bound on the largest squared mode frequency from Gershgorin discs
    /// of a diagonally balanced similarity transform of the frequency matrix.
    double max_frequency_sq_bound() const;
};

/// Exact N+1 degree-of-freedom system of the ensemble.
ArrowSystem build_full(const Ensemble& ensemble);

/// Three-mode model in the coordinates (X, collective normal mode, scaled
/// deviant coordinate). Entries of the frequency-squared matrix:
///
///     [ omega_c_sq      -lambda        -weak_coupling ]
///     [ -lambda         omega_bar_sq    0             ]
///     [ -weak_coupling  0               omega_sq      ]
struct ReducedModel {
    double omega_c_sq = 0.0;
    double omega_bar_sq = 0.0;
    double omega_sq = 0.0;
    double lambda = 0.0;
    double weak_coupling = 0.0;

    std::size_t n = 0;
    std::size_t tau = 0;
    double support_mass = 0.0;
    double normal_mass = 0.0;
    double deviant_mass = 0.0;

    Eigen::Matrix3d matrix() const;
    /// Physical-coordinate arrow system (masses M, m, m1) with the same
    /// frequency matrix, so the full-system integrators apply unchanged.
    ArrowSystem to_arrow() const;
};

/// Requires 1 <= tau <= n/2. With tau deviants the weak coupling carries a
/// sqrt(tau) factor; tau = 1 gives k1 / sqrt(N M m1).
ReducedModel build_reduced(const Ensemble& ensemble);

} // namespace pendsearch
