#pragma once

// Reference computations used only by the tests. They rebuild everything from
// the pendulum Lagrangian with dense linear algebra and share no code with
// the library beyond plain data.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Pendulum {
    double mass;   // per-pendulum mass
    double spring; // m g / l
};

struct Chain {
    double support_mass;
    double ground_spring; // K
    std::vector<Pendulum> pendulums;

    Eigen::Index dof() const { return static_cast<Eigen::Index>(pendulums.size()) + 1; }

    // V = 1/2 K X^2 + sum 1/2 k_j (x_j - X)^2
    Eigen::MatrixXd stiffness() const
    {
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dof(), dof());
        k(0, 0) = ground_spring;
        for (std::size_t j = 0; j < pendulums.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j) + 1;
            const double s = pendulums[j].spring;
            k(0, 0) += s;
            k(i, i) += s;
            k(0, i) -= s;
            k(i, 0) -= s;
        }
        return k;
    }

    Eigen::VectorXd masses() const
    {
        Eigen::VectorXd m(dof());
        m[0] = support_mass;
        for (std::size_t j = 0; j < pendulums.size(); ++j)
            m[static_cast<Eigen::Index>(j) + 1] = pendulums[j].mass;
        return m;
    }

    // Squared mode frequencies, ascending.
    Eigen::VectorXd frequencies_sq() const
    {
        const Eigen::VectorXd s = masses().cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd a = s.asDiagonal() * stiffness() * s.asDiagonal();
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    }

    // x(t) for x(0) = x0, v(0) = v0, from the generalized eigenproblem.
    Eigen::VectorXd displacement(const Eigen::VectorXd& x0, const Eigen::VectorXd& v0, double t) const
    {
        const Eigen::VectorXd sq = masses().cwiseSqrt();
        const Eigen::MatrixXd a = sq.cwiseInverse().asDiagonal() * stiffness() * sq.cwiseInverse().asDiagonal();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        const Eigen::VectorXd q0 = es.eigenvectors().transpose() * sq.cwiseProduct(x0);
        const Eigen::VectorXd p0 = es.eigenvectors().transpose() * sq.cwiseProduct(v0);
        Eigen::VectorXd q(q0.size());
        for (Eigen::Index i = 0; i < q.size(); ++i) {
            const double w = std::sqrt(std::max(es.eigenvalues()[i], 0.0));
            q[i] = q0[i] * std::cos(w * t) + (w > 0.0 ? p0[i] * std::sin(w * t) / w : p0[i] * t);
        }
        return (es.eigenvectors() * q).cwiseQuotient(sq);
    }

    double energy(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const
    {
        return 0.5 * v.dot(masses().asDiagonal() * v) + 0.5 * x.dot(stiffness() * x);
    }
};

// Star of n pendulums with mass m_j/N and spring m_j g / (l_j N).
inline Chain star(std::size_t n, double m, double l, double m1, double l1, const std::vector<std::size_t>& deviants,
                  double support_mass, double support_length, double g = 9.81)
{
    Chain c;
    const double nd = static_cast<double>(n);
    c.support_mass = support_mass;
    c.ground_spring = (support_mass + m / nd) * g / support_length;
    for (std::size_t j = 0; j < n; ++j) {
        bool dev = false;
        for (std::size_t d : deviants)
            dev = dev || d == j;
        const double mass = (dev ? m1 : m) / nd;
        c.pendulums.push_back({mass, mass * g / (dev ? l1 : l)});
    }
    return c;
}

// |<w| exp(-i H t) |u>|^2 for H = |u><u| + |w><w| on n states, dense.
inline double marked_probability(std::size_t n, std::size_t marked, double t)
{
    const auto dim = static_cast<Eigen::Index>(n);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(static_cast<double>(n)));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    w[static_cast<Eigen::Index>(marked)] = 1.0;
    const Eigen::MatrixXd h = u * u.transpose() + w * w.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    std::complex<double> amp = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i)
        amp += std::exp(std::complex<double>(0.0, -es.eigenvalues()[i] * t)) * es.eigenvectors().col(i).dot(w) *
               es.eigenvectors().col(i).dot(u);
    return std::norm(amp);
}

} // namespace oracle
