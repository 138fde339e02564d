#include "pendsearch/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pendsearch/errors.hpp"

namespace pendsearch {

namespace {

void check_dimensions(const ArrowSystem& system, const State& state)
{
    if (state.displacements.size() != system.dof() || state.velocities.size() != system.dof())
        throw ValidationError("state dimension does not match the system's degrees of freedom");
}

// Yoshida's sixth-order triple-jump composition (solution A).
constexpr double yoshida_w1 = -1.17767998417887;
constexpr double yoshida_w2 = 0.235573213359357;
constexpr double yoshida_w3 = 0.784513610477560;
constexpr double yoshida_w0 = 1.0 - 2.0 * (yoshida_w1 + yoshida_w2 + yoshida_w3);
constexpr std::array<double, 7> composition_weights{yoshida_w3, yoshida_w2, yoshida_w1, yoshida_w0,
                                                    yoshida_w1, yoshida_w2, yoshida_w3};

} // namespace

State push_support(const ArrowSystem& system, double speed)
{
    if (!(speed >= 0.0) || !std::isfinite(speed))
        throw ValidationError("push speed must be finite and non-negative");
    State s;
    s.displacements.assign(system.dof(), 0.0);
    s.velocities.assign(system.dof(), 0.0);
    s.velocities[0] = speed;
    return s;
}

double pendulum_energy(const ArrowSystem& system, const State& state, std::size_t j)
{
    const double x = state.displacements[j + 1];
    const double v = state.velocities[j + 1];
    const double rel = x - system.coupling_ratio(j) * state.displacements[0];
    return 0.5 * system.masses[j + 1] * v * v + 0.5 * system.stiff_diag[j + 1] * rel * rel;
}

double support_energy(const ArrowSystem& system, const State& state)
{
    const double x = state.displacements[0];
    const double v = state.velocities[0];
    return 0.5 * system.masses[0] * v * v + 0.5 * system.support_stiffness * x * x;
}

GroupEnergies energy_accounting(const ArrowSystem& system, const State& state)
{
    check_dimensions(system, state);
    GroupEnergies e;
    e.support = support_energy(system, state);
    for (std::size_t j = 0; j < system.pendulums(); ++j) {
        const double ej = pendulum_energy(system, state, j);
        if (system.roles[j] == Role::deviant)
            e.deviant += ej;
        else
            e.collective += ej;
    }
    e.total = e.support + e.deviant + e.collective;
    return e;
}

double mass_weighted(const ArrowSystem& system, std::size_t pendulum, double displacement)
{
    return std::sqrt(system.masses[pendulum + 1]) * displacement;
}

void EnergyTrace::append(double t, const GroupEnergies& e)
{
    times.push_back(t);
    support.push_back(e.support);
    deviant.push_back(e.deviant);
    collective.push_back(e.collective);
    total.push_back(e.total);
}

double EnergyTrace::max_relative_drift() const
{
    if (total.empty() || total.front() == 0.0)
        return 0.0;
    const double e0 = total.front();
    double worst = 0.0;
    for (double e : total)
        worst = std::max(worst, std::abs(e - e0) / e0);
    return worst;
}

void write_csv(std::ostream& out, const EnergyTrace& trace)
{
    std::ostringstream buf;
    buf << std::setprecision(std::numeric_limits<double>::max_digits10);
    buf << "t,E_support,E_deviant,E_collective,E_total\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        buf << trace.times[i] << ',' << trace.support[i] << ',' << trace.deviant[i] << ',' << trace.collective[i]
            << ',' << trace.total[i] << '\n';
    out << buf.str();
}

ModalPropagator::ModalPropagator(const ArrowSystem& system, const State& initial) : t0_(initial.time)
{
    check_dimensions(system, initial);
    const auto d = static_cast<Eigen::Index>(system.dof());
    sqrt_mass_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i)
        sqrt_mass_[i] = std::sqrt(system.masses[static_cast<std::size_t>(i)]);

    const Eigen::MatrixXd lambda = system.dense_frequency_matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lambda);
    if (solver.info() != Eigen::Success)
        throw EigenFailure("eigendecomposition of the frequency matrix did not converge");
    eigenvalues_ = solver.eigenvalues();
    modes_ = solver.eigenvectors();

    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if (eigenvalues_.minCoeff() < -1e-10 * scale)
        throw EigenFailure("frequency matrix is not positive semi-definite; the system is malformed");

    Eigen::VectorXd q0(d), p0(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        q0[i] = sqrt_mass_[i] * initial.displacements[static_cast<std::size_t>(i)];
        p0[i] = sqrt_mass_[i] * initial.velocities[static_cast<std::size_t>(i)];
    }
    cos_coeff_ = modes_.transpose() * q0;
    sin_coeff_ = modes_.transpose() * p0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double rho = std::sqrt(std::max(eigenvalues_[i], 0.0));
        // Zero mode: free drift, handled in at().
        if (rho > 0.0)
            sin_coeff_[i] /= rho;
    }
}

State ModalPropagator::at(double t) const
{
    const Eigen::Index d = eigenvalues_.size();
    const double tau = t - t0_;
    Eigen::VectorXd qa(d), pa(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double rho = std::sqrt(std::max(eigenvalues_[i], 0.0));
        if (rho > 0.0) {
            const double c = std::cos(rho * tau);
            const double s = std::sin(rho * tau);
            qa[i] = cos_coeff_[i] * c + sin_coeff_[i] * s;
            pa[i] = rho * (sin_coeff_[i] * c - cos_coeff_[i] * s);
        } else {
            qa[i] = cos_coeff_[i] + sin_coeff_[i] * tau;
            pa[i] = sin_coeff_[i];
        }
    }
    const Eigen::VectorXd q = modes_ * qa;
    const Eigen::VectorXd p = modes_ * pa;
    State s;
    s.time = t;
    s.displacements.resize(static_cast<std::size_t>(d));
    s.velocities.resize(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        s.displacements[static_cast<std::size_t>(i)] = q[i] / sqrt_mass_[i];
        s.velocities[static_cast<std::size_t>(i)] = p[i] / sqrt_mass_[i];
    }
    return s;
}

std::vector<State> modal_solve(const ArrowSystem& system, const State& initial, const std::vector<double>& times)
{
    if (!std::is_sorted(times.begin(), times.end()))
        throw ValidationError("modal_solve: times must be sorted ascending");
    const ModalPropagator prop(system, initial);
    std::vector<State> out;
    out.reserve(times.size());
    for (double t : times)
        out.push_back(prop.at(t));
    return out;
}

double shortest_period_bound(const ArrowSystem& system)
{
    return 2.0 * std::numbers::pi / std::sqrt(system.max_frequency_sq_bound());
}

double recommended_timestep(const ArrowSystem& system)
{
    return shortest_period_bound(system) / 100.0;
}

double deviant_period(const ArrowSystem& system)
{
    std::size_t pick = 0;
    for (std::size_t j = 0; j < system.pendulums(); ++j) {
        if (system.roles[j] == Role::deviant) {
            pick = j;
            break;
        }
    }
    return 2.0 * std::numbers::pi / std::sqrt(system.stiff_diag[pick + 1] / system.masses[pick + 1]);
}

Evolution leapfrog_evolve(const ArrowSystem& system, const State& initial, double dt, std::size_t steps,
                          const LeapfrogOptions& options)
{
    check_dimensions(system, initial);
    const double dt_max = shortest_period_bound(system) / 50.0;
    if (!(dt > 0.0) || dt > dt_max) {
        std::ostringstream msg;
        msg << "timestep " << dt << " outside (0, " << dt_max << "] (T_min/50)";
        throw UnstableTimestep(msg.str());
    }
    for (std::size_t w : options.watch)
        if (w >= system.dof())
            throw ValidationError("watched degree of freedom out of range");

    const std::size_t sample_every =
        options.sample_every > 0
            ? options.sample_every
            : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(deviant_period(system) / (8.0 * dt))));
    const std::size_t watch_every = std::max<std::size_t>(1, options.watch_every);

    const std::size_t d = system.dof();
    std::vector<double> x = initial.displacements;
    std::vector<double> v = initial.velocities;
    std::vector<double> acc(d);
    std::vector<double> inv_mass(d);
    for (std::size_t i = 0; i < d; ++i)
        inv_mass[i] = 1.0 / system.masses[i];

    auto accelerate = [&] {
        system.apply_stiffness(x, acc);
        for (std::size_t i = 0; i < d; ++i)
            acc[i] *= -inv_mass[i];
    };

    Evolution evo;
    evo.watches.resize(options.watch.size());
    for (std::size_t w = 0; w < options.watch.size(); ++w)
        evo.watches[w].dof = options.watch[w];

    State cur;
    auto record = [&](std::size_t step) {
        const double t = initial.time + static_cast<double>(step) * dt;
        const bool energy = step % sample_every == 0 || step == steps;
        const bool watch = step % watch_every == 0;
        const bool snap = options.snapshot_every > 0 && step % options.snapshot_every == 0;
        if (watch) {
            for (auto& ws : evo.watches) {
                ws.times.push_back(t);
                ws.displacements.push_back(x[ws.dof]);
            }
        }
        if (energy || snap) {
            cur.time = t;
            cur.displacements = x;
            cur.velocities = v;
            if (energy)
                evo.trace.append(t, energy_accounting(system, cur));
            if (snap)
                evo.snapshots.push_back(cur);
        }
    };

    accelerate();
    record(0);
    for (std::size_t step = 1; step <= steps; ++step) {
        for (double w : composition_weights) {
            const double h = w * dt;
            const double half = 0.5 * h;
            for (std::size_t i = 0; i < d; ++i) {
                v[i] += half * acc[i];
                x[i] += h * v[i];
            }
            accelerate();
            for (std::size_t i = 0; i < d; ++i)
                v[i] += half * acc[i];
        }
        record(step);
    }

    evo.final_state.time = initial.time + static_cast<double>(steps) * dt;
    evo.final_state.displacements = std::move(x);
    evo.final_state.velocities = std::move(v);
    return evo;
}

} // namespace pendsearch
