#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssea {

struct LinearFit {
    double slope = 0, intercept = 0;
    double residual_rms = 0;  // root mean square of fit residuals
    double slope_stderr = 0;
};

// Ordinary least squares y = slope x + intercept.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need at least two paired samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("fit_line: abscissae coincide");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.slope * x[i] + f.intercept);
        rss += r * r;
    }
    f.residual_rms = std::sqrt(rss / double(n));
    f.slope_stderr = n > 2 ? std::sqrt(rss / double(n - 2) / sxx) : 0.0;
    return f;
}

}  // namespace ssea
