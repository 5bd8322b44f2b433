#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace parstab {

// Points always carry three coordinates; only the first d are used.
using Point = std::array<double, 3>;

// One face of the box: x_{axis+1} = 0 (low) or x_{axis+1} = L (high).
struct Face {
    int axis = 0;
    bool high = false;

    double outward_normal() const { return high ? 1.0 : -1.0; }
    std::string label() const;
    // Accepts "x2=0", "x1=L".
    static Face parse(const std::string& text, int d);
    bool operator==(const Face&) const = default;
};

// Separable plant: A f = -Lap f - b.grad f - c f on a box, mu = exp(b.x),
// so that mu A f = -div(mu grad f) + c~ f with a~_i = mu and c~ = -c mu.
struct PlantConfig {
    int d = 2;
    std::vector<double> lengths;
    std::vector<double> b;
    double c = 0.0;
    Face control_face;
    std::optional<double> nu;
    double delta = 0.5;
    bool allow_general_pattern = false;

    // Throws parstab::Error describing the first violated invariant.
    void validate() const;

    double mu(const Point& x) const;
    double mu_min() const;
    double mu_max() const;
    double c_tilde(const Point& x) const { return -c * mu(x); }
    // inf over the box of c~/mu; constant for this family.
    double inf_ctilde_over_mu() const { return -c; }
    double nu_value() const;
    double drift_shift() const;  // |b|^2 / 4

    bool contains(const Point& x, double tol = 1e-12) const;
    bool on_control_face(const Point& s, double tol = 1e-12) const;
    bool interior(const Point& x) const;

    // d = 2, (0,pi)^2, b = (3,3), c = 10, control on x2 = 0.
    static PlantConfig example();
    // Same family in d dimensions with sides pi.
    static PlantConfig make(int d, std::vector<double> b, double c, Face face, double delta);
};

}  // namespace parstab
