#include "pendsearch/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "pendsearch/errors.hpp"

namespace pendsearch {

namespace {

// Resonance is considered to hold while the detuning stays below this
// fraction of the matched coupling.
constexpr double resonance_detuning_fraction = 0.2;

double per_deviant_scale(std::size_t n, std::size_t tau)
{
    return std::sqrt(static_cast<double>(n) / static_cast<double>(tau));
}

} // namespace

BlockModes block_modes(const ReducedModel& model)
{
    const double a = model.omega_c_sq;
    const double b = model.omega_bar_sq;
    const double mean = 0.5 * (a + b);
    const double half_split = 0.5 * std::hypot(a - b, 2.0 * model.lambda);
    BlockModes modes;
    modes.omega1_sq = mean + half_split;
    // Product form avoids cancellation when the lower mode is small.
    const double det = a * b - model.lambda * model.lambda;
    modes.omega2_sq = modes.omega1_sq != 0.0 ? det / modes.omega1_sq : mean - half_split;
    return modes;
}

RotatedModel rotate(const ReducedModel& model)
{
    if (model.tau == 0 || model.n == 0)
        throw ValidationError("rotate: reduced model has no deviant group");
    const BlockModes modes = block_modes(model);
    const double theta = 0.5 * std::atan2(-2.0 * model.lambda, model.omega_c_sq - model.omega_bar_sq);
    const double scale = per_deviant_scale(model.n, model.tau);

    RotatedModel rot;
    rot.omega1_sq = modes.omega1_sq;
    rot.omega2_sq = modes.omega2_sq;
    rot.omega_sq = model.omega_sq;
    rot.mixing_angle = theta;
    rot.alpha = scale * model.weak_coupling * std::cos(theta);
    rot.beta = -scale * model.weak_coupling * std::sin(theta);
    rot.n = model.n;
    rot.tau = model.tau;
    return rot;
}

Eigen::Matrix3d RotatedModel::matrix() const
{
    const double scale = per_deviant_scale(n, tau);
    Eigen::Matrix3d m;
    m << omega1_sq, 0.0, -alpha / scale,
         0.0, omega2_sq, -beta / scale,
         -alpha / scale, -beta / scale, omega_sq;
    return m;
}

Eigen::Matrix3d RotatedModel::unrotated() const
{
    const double c = std::cos(mixing_angle);
    const double s = std::sin(mixing_angle);
    Eigen::Matrix3d r;
    r << c, -s, 0.0,
         s, c, 0.0,
         0.0, 0.0, 1.0;
    return r * matrix() * r.transpose();
}

double matched_coupling(const RotatedModel& rot, Branch branch)
{
    return branch == Branch::upper ? rot.alpha : rot.beta;
}

double matched_omega_sq(const RotatedModel& rot, Branch branch)
{
    return branch == Branch::upper ? rot.omega1_sq : rot.omega2_sq;
}

Branch natural_branch(const RotatedModel& rot)
{
    return std::abs(rot.omega1_sq - rot.omega_sq) <= std::abs(rot.omega2_sq - rot.omega_sq) ? Branch::upper
                                                                                               : Branch::lower;
}

ResonanceDesign design_support(const Ensemble& ensemble, double support_mass, DesignOptions options)
{
    if (ensemble.tau() == 0)
        throw ValidationError("design_support: ensemble has no deviant pendulum");
    if (!(support_mass > 0.0))
        throw ValidationError("design_support: support mass must be positive");

    const double g = ensemble.gravity();
    const double m = ensemble.normal().mass_scale;
    const double m1 = ensemble.deviant().mass_scale;
    const double k = stiffness(ensemble.normal(), g);
    const double k1 = stiffness(ensemble.deviant(), g);
    const double nd = static_cast<double>(ensemble.n());
    const double td = static_cast<double>(ensemble.tau());

    const double omega_sq = k1 / m1;
    const double omega_bar_sq = k / m;
    const double lambda = k / std::sqrt(support_mass * m);
    const double weak = k1 * std::sqrt(td) / std::sqrt(nd * support_mass * m1);
    const double gap = omega_sq - omega_bar_sq;
    const double gap_min = options.gap_min.value_or(10.0 * weak);

    if (!(std::abs(gap) > gap_min)) {
        std::ostringstream msg;
        msg << "deviant frequency^2 " << omega_sq << " is within " << gap_min << " of the collective mode "
            << omega_bar_sq << "; no support can satisfy the resonance condition";
        throw DegenerateDeviation(msg.str());
    }

    const Branch feasible = gap > 0.0 ? Branch::upper : Branch::lower;
    if (options.branch && *options.branch != feasible)
        throw InfeasibleDesign(gap > 0.0 ? "a short deviant can only match the upper block mode"
                                         : "a long deviant can only match the lower block mode");

    const double omega_c_sq = omega_sq - lambda * lambda / gap;
    const double K = support_mass * omega_c_sq - k - td * k1 / nd;
    if (!(K > 0.0)) {
        std::ostringstream msg;
        msg << "resonant support needs ground stiffness K = " << K << " <= 0";
        throw InfeasibleDesign(msg.str());
    }

    ReducedModel check;
    check.omega_c_sq = omega_c_sq;
    check.omega_bar_sq = omega_bar_sq;
    check.lambda = lambda;
    const BlockModes modes = block_modes(check);
    const double matched = feasible == Branch::upper ? modes.omega1_sq : modes.omega2_sq;

    ResonanceDesign design;
    design.support_mass = support_mass;
    design.support_stiffness = K;
    design.branch = feasible;
    design.detuning = std::abs(matched - omega_sq);
    design.tolerance = 1e-9 * omega_sq;
    if (design.detuning > design.tolerance)
        throw InfeasibleDesign("designed support misses the resonance beyond tolerance");
    return design;
}

Ensemble apply_design(const Ensemble& ensemble, const ResonanceDesign& design)
{
    const Ensemble with_mass = ensemble.with_support(design.support_mass, ensemble.support_length());
    return with_mass.with_support(design.support_mass, with_mass.length_for_stiffness(design.support_stiffness));
}

double predict_transfer_cycles(const RotatedModel& rot, std::size_t n, std::size_t tau, Branch branch)
{
    if (n == 0 || tau == 0)
        throw ValidationError("predict_transfer_cycles: n and tau must be positive");
    const double beta = matched_coupling(rot, branch);
    const double c = beta / per_deviant_scale(n, tau);
    const double detuning = std::abs(matched_omega_sq(rot, branch) - rot.omega_sq);
    if (!(c > 0.0) || detuning > resonance_detuning_fraction * c) {
        std::ostringstream msg;
        msg << "off resonance: detuning " << detuning << " vs matched coupling " << c;
        throw OffResonance(msg.str());
    }
    return rot.omega_sq * per_deviant_scale(n, tau) / (2.0 * beta);
}

double predict_transfer_cycles(const RotatedModel& rot, std::size_t n, std::size_t tau)
{
    return predict_transfer_cycles(rot, n, tau, natural_branch(rot));
}

double deviant_period(const ReducedModel& model)
{
    return 2.0 * std::numbers::pi / std::sqrt(model.omega_sq);
}

} // namespace pendsearch
