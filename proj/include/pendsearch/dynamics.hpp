#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "pendsearch/ensemble.hpp"

namespace pendsearch {

struct State {
    double time = 0.0;
    std::vector<double> displacements; // index 0 = support
    std::vector<double> velocities;
};

/// Support pushed with speed v0, everything else at rest.
State push_support(const ArrowSystem& system, double speed);

struct GroupEnergies {
    double support = 0.0;
    double deviant = 0.0;
    double collective = 0.0;
    double total = 0.0;
};

/// 1/2 m_j v_j^2 + 1/2 d_j (x_j - r_j X)^2 for pendulum j (0-based).
double pendulum_energy(const ArrowSystem& system, const State& state, std::size_t j);
double support_energy(const ArrowSystem& system, const State& state);
GroupEnergies energy_accounting(const ArrowSystem& system, const State& state);

/// sqrt(m_j) |x_j|: displacement of pendulum j in mass-weighted units, so that
/// amplitude^2 scales with the pendulum's energy.
double mass_weighted(const ArrowSystem& system, std::size_t pendulum, double displacement);

struct EnergyTrace {
    std::vector<double> times;
    std::vector<double> support;
    std::vector<double> deviant;
    std::vector<double> collective;
    std::vector<double> total;

    std::size_t size() const noexcept { return times.size(); }
    void append(double t, const GroupEnergies& e);
    /// Max over samples of |E(t) - E(0)| / E(0); zero for a zero-energy trace.
    double max_relative_drift() const;
};

/// Columns t,E_support,E_deviant,E_collective,E_total; 17 significant digits.
void write_csv(std::ostream& out, const EnergyTrace& trace);

/// Exact solution of M x'' = -K x through the eigendecomposition of
/// M^{-1/2} K M^{-1/2}. Evaluation at any time carries no accumulated error.
class ModalPropagator {
public:
    ModalPropagator(const ArrowSystem& system, const State& initial);

    State at(double t) const;
    const Eigen::VectorXd& frequencies_sq() const noexcept { return eigenvalues_; }

private:
    Eigen::VectorXd sqrt_mass_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd modes_;
    Eigen::VectorXd cos_coeff_;
    Eigen::VectorXd sin_coeff_; // already divided by the mode frequency
    double t0_ = 0.0;
};

std::vector<State> modal_solve(const ArrowSystem& system, const State& initial, const std::vector<double>& times);

/// Shortest modal period implied by the Gershgorin frequency bound.
double shortest_period_bound(const ArrowSystem& system);
/// T_min / 100.
double recommended_timestep(const ArrowSystem& system);
/// Oscillation period of the first deviant pendulum (first pendulum if none).
double deviant_period(const ArrowSystem& system);

struct LeapfrogOptions {
    /// Energy sampling stride in steps; 0 selects ceil(T_dev / (8 dt)).
    std::size_t sample_every = 0;
    /// Degrees of freedom whose displacement is recorded every watch_every steps.
    std::vector<std::size_t> watch;
    std::size_t watch_every = 1;
    /// Record full states every snapshot_every steps (0 = never).
    std::size_t snapshot_every = 0;
};

struct WatchSeries {
    std::size_t dof = 0;
    std::vector<double> times;
    std::vector<double> displacements;
};

struct Evolution {
    EnergyTrace trace;
    std::vector<WatchSeries> watches;
    std::vector<State> snapshots;
    State final_state;
};

/// Symplectic sixth-order composition of velocity-Verlet substeps; each force
/// evaluation is O(N) through the arrow structure. Throws UnstableTimestep if
/// dt exceeds T_min / 50.
Evolution leapfrog_evolve(const ArrowSystem& system, const State& initial, double dt, std::size_t steps,
                          const LeapfrogOptions& options = {});

} // namespace pendsearch
