#include "parstab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <stdexcept>

namespace parstab {

Rule1D composite_gauss(double a, double b, int panels) {
    if (panels < 1 || !(b > a)) throw std::invalid_argument("composite_gauss: bad interval or panel count");
    using G = boost::math::quadrature::gauss<double, kGaussOrder>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();

    // Boost stores the nonnegative half of a symmetric rule; rebuild all 16 nodes once.
    std::vector<double> ref_x, ref_w;
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        ref_x.push_back(-x[i]);
        ref_w.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        ref_x.push_back(x[i]);
        ref_w.push_back(w[i]);
    }

    Rule1D r;
    r.nodes.reserve(ref_x.size() * panels);
    r.weights.reserve(ref_x.size() * panels);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        for (std::size_t i = 0; i < ref_x.size(); ++i) {
            r.nodes.push_back(mid + 0.5 * h * ref_x[i]);
            r.weights.push_back(0.5 * h * ref_w[i]);
        }
    }
    return r;
}

int panels_for_wavenumber(int kmax) { return 8 * std::max(kmax, 1); }

double integrate(const Rule1D& rule, const std::vector<double>& values) {
    if (values.size() != rule.size()) throw std::invalid_argument("integrate: sample count does not match rule");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += rule.weights[i] * values[i];
    return s;
}

}  // namespace parstab
