#include "pendsearch/analogies.hpp"

#include <cmath>
#include <complex>

#include "pendsearch/errors.hpp"

namespace pendsearch {

namespace {

using cplx = std::complex<double>;

struct PlaneState {
    cplx marked;
    cplx rest;
};

// In the basis (|w>, |b>) with |b> uniform over the other n-1 states:
//   H = [[1 + 1/n, sqrt(n-1)/n], [sqrt(n-1)/n, (n-1)/n]],  psi(0) = (1/sqrt n, sqrt((n-1)/n)).
PlaneState evolve_plane(std::size_t n, double t)
{
    if (!(t >= 0.0))
        throw ValidationError("evolution time must be non-negative");
    const double nd = static_cast<double>(n);
    const double h11 = 1.0 + 1.0 / nd;
    const double h22 = (nd - 1.0) / nd;
    const double h12 = std::sqrt(nd - 1.0) / nd;

    const double mean = 0.5 * (h11 + h22);
    const double bz = 0.5 * (h11 - h22);
    const double bx = h12;
    const double omega = std::hypot(bx, bz);

    // exp(-iHt) = e^{-i mean t} (cos(omega t) I - i sin(omega t) (b . sigma) / omega)
    const double c = std::cos(omega * t);
    const double s = std::sin(omega * t) / omega;
    const cplx phase = std::exp(cplx(0.0, -mean * t));
    const cplx u11 = phase * cplx(c, -s * bz);
    const cplx u22 = phase * cplx(c, s * bz);
    const cplx u12 = phase * cplx(0.0, -s * bx);

    const double a0 = 1.0 / std::sqrt(nd);
    const double b0 = std::sqrt((nd - 1.0) / nd);
    return {u11 * a0 + u12 * b0, u12 * a0 + u22 * b0};
}

} // namespace

double two_level_probability(std::size_t n, double t)
{
    if (n < 1)
        throw ValidationError("two_level_probability: n must be positive");
    if (!(t >= 0.0))
        throw ValidationError("evolution time must be non-negative");
    const double s = std::sin(t / std::sqrt(static_cast<double>(n)));
    return s * s;
}

QuantumSystem::QuantumSystem(std::size_t n_, std::size_t marked_) : n(n_), marked(marked_)
{
    if (n < 2)
        throw ValidationError("quantum system needs n >= 2");
    if (marked >= n)
        throw ValidationError("marked index out of range");
}

double full_evolution(const QuantumSystem& system, double t)
{
    return std::norm(evolve_plane(system.n, t).marked);
}

double full_evolution_norm(const QuantumSystem& system, double t)
{
    const PlaneState s = evolve_plane(system.n, t);
    return std::norm(s.marked) + std::norm(s.rest);
}

std::pair<double, double> elastic_collision(double m1, double v1, double m2, double v2)
{
    if (!(m1 > 0.0) || !(m2 > 0.0))
        throw ValidationError("elastic_collision: masses must be positive");
    const double total = m1 + m2;
    return {((m1 - m2) * v1 + 2.0 * m2 * v2) / total, ((m2 - m1) * v2 + 2.0 * m1 * v1) / total};
}

std::vector<double> collision_speeds(std::size_t n)
{
    if (n < 4)
        throw ValidationError("collision_pump: n must be >= 4");
    const double big_mass = static_cast<double>(n);
    const double big_speed = 1.0 / std::sqrt(big_mass);
    // Frame: the big sphere always arrives moving in +x; the small sphere
    // approaches it head-on (velocity <= 0) before every hit.
    std::vector<double> speeds;
    double speed = 0.0;
    while (speed < 1.0) {
        speed = std::abs(elastic_collision(1.0, -speed, big_mass, big_speed).first);
        speeds.push_back(speed);
    }
    return speeds;
}

std::size_t collision_pump(std::size_t n)
{
    return collision_speeds(n).size();
}

} // namespace pendsearch
