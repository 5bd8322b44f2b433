#pragma once

#include <vector>

namespace parstab {

// Composite Gauss-Legendre rule on [a, b].
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

inline constexpr int kGaussOrder = 16;

// `panels` equal panels, 16 nodes each.
Rule1D composite_gauss(double a, double b, int panels);

// Panel count giving at least 8 panels per half-wavelength of sin(k*pi*x/L).
int panels_for_wavenumber(int kmax);

double integrate(const Rule1D& rule, const std::vector<double>& values);

}  // namespace parstab
