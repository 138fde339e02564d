#include "pendsearch/powerlaw.hpp"

#include <cmath>

#include "pendsearch/errors.hpp"

namespace pendsearch {

PowerLawFit fit_powerlaw(const std::vector<std::pair<double, double>>& rows)
{
    if (rows.size() < 3)
        throw ValidationError("fit_powerlaw: need at least three rows");
    const double count = static_cast<double>(rows.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : rows) {
        if (!(x > 0.0) || !(y > 0.0))
            throw ValidationError("fit_powerlaw: rows must be positive");
        mean_x += std::log(x);
        mean_y += std::log(y);
    }
    mean_x /= count;
    mean_y /= count;

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : rows) {
        const double dx = std::log(x) - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - mean_y);
    }
    if (!(sxx > 0.0))
        throw DegenerateFit("fit_powerlaw: all x values are equal");

    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ssr = 0.0;
    for (const auto& [x, y] : rows) {
        const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / (count - 2.0) / sxx);
    return fit;
}

} // namespace pendsearch
