#include "pendsearch/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pendsearch/errors.hpp"

namespace pendsearch {

PendulumSpec::PendulumSpec(double mass_scale_, double length_) : mass_scale(mass_scale_), length(length_)
{
    if (!(mass_scale > 0.0) || !std::isfinite(mass_scale))
        throw ValidationError("pendulum mass_scale must be positive and finite");
    if (!(length > 0.0) || !std::isfinite(length))
        throw ValidationError("pendulum length must be positive and finite");
}

double stiffness(const PendulumSpec& spec, double gravity)
{
    return spec.mass_scale * gravity / spec.length;
}

Ensemble::Ensemble(std::size_t n, PendulumSpec normal, PendulumSpec deviant,
                   std::vector<std::size_t> deviant_indices, double support_mass,
                   double support_length, double gravity)
    : n_(n), normal_(normal), deviant_(deviant), deviant_indices_(std::move(deviant_indices)),
      support_mass_(support_mass), support_length_(support_length), gravity_(gravity)
{
    std::ostringstream problems;
    if (n_ < 2)
        problems << " n must be >= 2;";
    std::sort(deviant_indices_.begin(), deviant_indices_.end());
    if (std::adjacent_find(deviant_indices_.begin(), deviant_indices_.end()) != deviant_indices_.end())
        problems << " deviant_indices contains duplicates;";
    if (!deviant_indices_.empty() && deviant_indices_.back() >= n_)
        problems << " deviant index " << deviant_indices_.back() << " out of range [0, " << n_ << ");";
    if (!(support_mass_ > 0.0))
        problems << " support mass must be positive;";
    if (!(support_length_ > 0.0))
        problems << " support length must be positive;";
    if (!(gravity_ > 0.0))
        problems << " gravity must be positive;";
    if (!problems.str().empty())
        throw ValidationError("invalid ensemble:" + problems.str());
}

bool Ensemble::is_deviant(std::size_t j) const
{
    return std::binary_search(deviant_indices_.begin(), deviant_indices_.end(), j);
}

double Ensemble::support_stiffness() const
{
    return (support_mass_ + normal_.mass_scale / static_cast<double>(n_)) * gravity_ / support_length_;
}

double Ensemble::length_for_stiffness(double K) const
{
    if (!(K > 0.0))
        throw ValidationError("support stiffness must be positive");
    return (support_mass_ + normal_.mass_scale / static_cast<double>(n_)) * gravity_ / K;
}

Ensemble Ensemble::with_deviants(std::vector<std::size_t> indices) const
{
    return Ensemble(n_, normal_, deviant_, std::move(indices), support_mass_, support_length_, gravity_);
}

Ensemble Ensemble::with_support(double support_mass, double support_length) const
{
    return Ensemble(n_, normal_, deviant_, deviant_indices_, support_mass, support_length, gravity_);
}

Ensemble Ensemble::with_deviant_spec(PendulumSpec deviant) const
{
    return Ensemble(n_, normal_, deviant, deviant_indices_, support_mass_, support_length_, gravity_);
}

void ArrowSystem::apply_stiffness(std::span<const double> x, std::span<double> out) const
{
    const std::size_t n = pendulums();
    const double hub = x[0];
    double acc = stiff_diag[0] * hub;
    for (std::size_t j = 0; j < n; ++j) {
        acc += stiff_spoke[j] * x[j + 1];
        out[j + 1] = stiff_diag[j + 1] * x[j + 1] + stiff_spoke[j] * hub;
    }
    out[0] = acc;
}

Eigen::MatrixXd ArrowSystem::dense_stiffness() const
{
    const auto d = static_cast<Eigen::Index>(dof());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        k(i, i) = stiff_diag[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 1; j < d; ++j) {
        k(0, j) = stiff_spoke[static_cast<std::size_t>(j - 1)];
        k(j, 0) = k(0, j);
    }
    return k;
}

Eigen::MatrixXd ArrowSystem::dense_frequency_matrix() const
{
    Eigen::VectorXd inv_sqrt(static_cast<Eigen::Index>(dof()));
    for (std::size_t i = 0; i < dof(); ++i)
        inv_sqrt[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(masses[i]);
    return inv_sqrt.asDiagonal() * dense_stiffness() * inv_sqrt.asDiagonal();
}

double ArrowSystem::max_frequency_sq_bound() const
{
    const std::size_t n = pendulums();
    const double hub_diag = stiff_diag[0] / masses[0];
    double radius = 0.0;
    double largest = 0.0;
    std::vector<double> offdiag(n);
    for (std::size_t j = 0; j < n; ++j) {
        offdiag[j] = std::abs(stiff_spoke[j]) / std::sqrt(masses[0] * masses[j + 1]);
        radius += offdiag[j];
        largest = std::max(largest, offdiag[j]);
    }
    // Scale the hub row by 1/s and hub column by s; s balances the two disc families.
    const double s = largest > 0.0 ? std::sqrt(radius / largest) : 1.0;
    double bound = hub_diag + (largest > 0.0 ? radius / s : 0.0);
    for (std::size_t j = 0; j < n; ++j)
        bound = std::max(bound, stiff_diag[j + 1] / masses[j + 1] + s * offdiag[j]);
    return bound;
}

ArrowSystem build_full(const Ensemble& ensemble)
{
    const std::size_t n = ensemble.n();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double g = ensemble.gravity();

    ArrowSystem sys;
    sys.masses.resize(n + 1);
    sys.stiff_diag.resize(n + 1);
    sys.stiff_spoke.resize(n);
    sys.roles.resize(n);

    const double K = ensemble.support_stiffness();
    sys.support_stiffness = K;
    sys.masses[0] = ensemble.support_mass();

    double spoke_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const PendulumSpec& spec = ensemble.spec_of(j);
        const double kj = stiffness(spec, g) * inv_n;
        sys.masses[j + 1] = spec.mass_scale * inv_n;
        sys.stiff_diag[j + 1] = kj;
        sys.stiff_spoke[j] = -kj;
        sys.roles[j] = ensemble.role(j);
        spoke_sum += kj;
    }
    sys.stiff_diag[0] = K + spoke_sum;
    return sys;
}

Eigen::Matrix3d ReducedModel::matrix() const
{
    Eigen::Matrix3d m;
    m << omega_c_sq, -lambda, -weak_coupling,
         -lambda, omega_bar_sq, 0.0,
         -weak_coupling, 0.0, omega_sq;
    return m;
}

ArrowSystem ReducedModel::to_arrow() const
{
    ArrowSystem sys;
    sys.masses = {support_mass, normal_mass, deviant_mass};
    sys.stiff_diag = {support_mass * omega_c_sq, normal_mass * omega_bar_sq, deviant_mass * omega_sq};
    sys.stiff_spoke = {-lambda * std::sqrt(support_mass * normal_mass),
                       -weak_coupling * std::sqrt(support_mass * deviant_mass)};
    sys.roles = {Role::normal, Role::deviant};
    double spring_sum = 0.0;
    for (std::size_t j = 0; j < 2; ++j)
        spring_sum += sys.stiff_spoke[j] * sys.stiff_spoke[j] / sys.stiff_diag[j + 1];
    sys.support_stiffness = sys.stiff_diag[0] - spring_sum;
    return sys;
}

ReducedModel build_reduced(const Ensemble& ensemble)
{
    const std::size_t n = ensemble.n();
    const std::size_t tau = ensemble.tau();
    if (tau == 0)
        throw ValidationError("reduced model needs at least one deviant pendulum (tau = 0)");
    if (2 * tau > n)
        throw ValidationError("reduced model needs tau <= n/2");

    const double g = ensemble.gravity();
    const double M = ensemble.support_mass();
    const double m = ensemble.normal().mass_scale;
    const double m1 = ensemble.deviant().mass_scale;
    const double k = stiffness(ensemble.normal(), g);
    const double k1 = stiffness(ensemble.deviant(), g);
    const double K = ensemble.support_stiffness();
    const double nd = static_cast<double>(n);
    const double td = static_cast<double>(tau);

    ReducedModel r;
    r.omega_c_sq = (K + k + td * k1 / nd) / M;
    r.omega_bar_sq = k / m;
    r.omega_sq = k1 / m1;
    r.lambda = k / std::sqrt(M * m);
    r.weak_coupling = k1 * std::sqrt(td) / std::sqrt(nd * M * m1);
    r.n = n;
    r.tau = tau;
    r.support_mass = M;
    r.normal_mass = m;
    r.deviant_mass = m1;
    return r;
}

} // namespace pendsearch
