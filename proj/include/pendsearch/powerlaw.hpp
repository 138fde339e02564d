#pragma once

#include <utility>
#include <vector>

namespace pendsearch {

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0; // log(y) at log(x) = 0
    double stderr_slope = 0.0;
};

/// Least-squares line through (log x, log y). Needs >= 3 positive rows and
/// at least two distinct x.
PowerLawFit fit_powerlaw(const std::vector<std::pair<double, double>>& rows);

} // namespace pendsearch
