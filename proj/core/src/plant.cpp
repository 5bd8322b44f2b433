#include "parstab/plant.hpp"

#include "parstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace parstab {

std::string Face::label() const {
    return "x" + std::to_string(axis + 1) + (high ? "=L" : "=0");
}

Face Face::parse(const std::string& text, int d) {
    // x<digit>=0 | x<digit>=L
    if (text.size() != 4 || text[0] != 'x' || text[2] != '=' || text[1] < '1' || text[1] > '9')
        throw Error("control face must look like \"x2=0\" or \"x1=L\", got \"" + text + "\"");
    Face f;
    f.axis = text[1] - '1';
    if (text[3] == '0')
        f.high = false;
    else if (text[3] == 'L')
        f.high = true;
    else
        throw Error("control face side must be 0 or L, got \"" + text + "\"");
    if (f.axis >= d) throw Error("control face axis " + std::to_string(f.axis + 1) + " exceeds dimension");
    return f;
}

void PlantConfig::validate() const {
    if (d < 1 || d > 3) throw Error("dimension must be 1, 2 or 3");
    if (static_cast<int>(lengths.size()) != d) throw Error("lengths must have d entries");
    if (static_cast<int>(b.size()) != d) throw Error("b must have d entries");
    for (double l : lengths)
        if (!(l > 0.0) || !std::isfinite(l)) throw Error("side lengths must be positive and finite");
    for (double v : b)
        if (!std::isfinite(v)) throw Error("drift entries must be finite");
    if (!std::isfinite(c)) throw Error("reaction constant must be finite");
    if (control_face.axis < 0 || control_face.axis >= d) throw Error("control face is not a face of the box");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw Error("delta must be positive");
    if (nu && (*nu < 0.0 || !std::isfinite(*nu))) throw Error("nu must be nonnegative");
    // Pointwise form of c~ + nu mu > 0.
    if (!(inf_ctilde_over_mu() + nu_value() > 0.0))
        throw Error("nu too small: c~ + nu*mu must be positive on the box");
}

double PlantConfig::mu(const Point& x) const {
    double e = 0.0;
    for (int i = 0; i < d; ++i) e += b[i] * x[i];
    return std::exp(e);
}

double PlantConfig::mu_min() const {
    double e = 0.0;
    for (int i = 0; i < d; ++i) e += std::min(0.0, b[i] * lengths[i]);
    return std::exp(e);
}

double PlantConfig::mu_max() const {
    double e = 0.0;
    for (int i = 0; i < d; ++i) e += std::max(0.0, b[i] * lengths[i]);
    return std::exp(e);
}

double PlantConfig::nu_value() const {
    if (nu) return *nu;
    return std::max(0.0, -inf_ctilde_over_mu() + 1.0);
}

double PlantConfig::drift_shift() const {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += b[i] * b[i];
    return 0.25 * s;
}

bool PlantConfig::contains(const Point& x, double tol) const {
    for (int i = 0; i < d; ++i) {
        const double t = tol * lengths[i];
        if (!(x[i] >= -t && x[i] <= lengths[i] + t)) return false;
    }
    return true;
}

bool PlantConfig::interior(const Point& x) const {
    for (int i = 0; i < d; ++i)
        if (!(x[i] > 0.0 && x[i] < lengths[i])) return false;
    return true;
}

bool PlantConfig::on_control_face(const Point& s, double tol) const {
    if (!contains(s, tol)) return false;
    const int a = control_face.axis;
    const double target = control_face.high ? lengths[a] : 0.0;
    return std::abs(s[a] - target) <= tol * lengths[a];
}

PlantConfig PlantConfig::make(int d, std::vector<double> b, double c, Face face, double delta) {
    PlantConfig p;
    p.d = d;
    p.lengths.assign(d, std::numbers::pi);
    p.b = std::move(b);
    p.c = c;
    p.control_face = face;
    p.delta = delta;
    return p;
}

PlantConfig PlantConfig::example() {
    return make(2, {3.0, 3.0}, 10.0, Face{1, false}, 0.5);
}

}  // namespace parstab
