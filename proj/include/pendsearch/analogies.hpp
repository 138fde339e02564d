#pragma once

// Cross-checks from outside the pendulum model: continuous-time quantum search
// on N basis states, and the elastic-collision picture of energy pumping.

#include <cstddef>
#include <utility>
#include <vector>

namespace pendsearch {

/// sin^2(t / sqrt(n)): the degenerate two-level approximation, started from
/// the uniform superposition.
double two_level_probability(std::size_t n, double t);

struct QuantumSystem {
    std::size_t n = 0;
    std::size_t marked = 0;

    QuantumSystem(std::size_t n, std::size_t marked);
};

/// Exact probability of the marked state at time t under
/// H = |u><u| + |w><w| (u uniform superposition, w marked), starting from |u>.
/// Evaluated in the invariant plane spanned by |w> and the uniform state on
/// the unmarked basis states.
double full_evolution(const QuantumSystem& system, double t);

/// Squared norm of the evolved state (unity up to rounding).
double full_evolution_norm(const QuantumSystem& system, double t);

/// 1D elastic collision; returns the post-collision velocities (v1', v2').
std::pair<double, double> elastic_collision(double m1, double v1, double m2, double v2);

/// Head-on collisions of a unit-mass sphere with a sphere of mass n moving at
/// 1/sqrt(n), the big sphere restored before each hit and the small one
/// returned toward it after each bounce. Counts hits until the small sphere's
/// speed reaches 1.
std::size_t collision_pump(std::size_t n);
/// Small-sphere speed after each hit of collision_pump.
std::vector<double> collision_speeds(std::size_t n);

} // namespace pendsearch
