#pragma once

#include "parstab/plant.hpp"
#include "parstab/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace parstab {

struct Eigenpair {
    std::array<int, 3> index{};  // positive wavenumbers, first d used
    int d = 1;
    double lambda = 0.0;
    double norm = 1.0;  // product of sqrt(2/L_i)
    int group = 0;      // modes sharing lambda share a group id
};

// Quadrature on the control face. For d = 1 the face is a point and the
// rule is the counting measure (one node, weight one).
struct BoundaryRule {
    std::vector<Point> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

// kmax bounds the wavenumbers along the face directions to be resolved.
BoundaryRule make_boundary_rule(const PlantConfig& plant, int kmax);

// Gauss-Legendre approximation of the L2(Gamma_1) inner product.
double boundary_inner(const BoundaryRule& rule, const std::vector<double>& f, const std::vector<double>& g);

struct PhiJet {
    double value = 0.0;
    std::array<double, 3> grad{};
    std::array<double, 3> second{};  // d^2/dx_i^2
};

// Provider interface: everything downstream needs only eigenvalues, point
// values and conormal traces. Indices are zero-based.
class EigenBasis {
public:
    virtual ~EigenBasis() = default;

    virtual const PlantConfig& plant() const = 0;
    virtual int size() const = 0;
    virtual const Eigenpair& pair(int n) const = 0;
    virtual double phi(int n, const Point& x) const = 0;
    // Conormal derivative sum_i n_i a~_i d_i phi_n on the control face.
    virtual double trace(int n, const Point& s) const = 0;
    // Largest face-direction wavenumber among the first `count` modes.
    virtual int face_wavenumber(int count) const = 0;

    double psi(int n, const Point& x) const;
    double lambda(int n) const { return pair(n).lambda; }
    std::vector<double> lambdas(int count) const;

    // G(k, n) = <trace_k, trace_n> for k < rows, n < cols.
    // Default: direct boundary quadrature.
    virtual Eigen::MatrixXd trace_gram(int rows, int cols) const;

    std::vector<double> trace_samples(int n, const BoundaryRule& rule) const;
};

// Analytic eigenbasis of the separable family.
class SeparableBasis final : public EigenBasis {
public:
    SeparableBasis(PlantConfig plant, int count);

    const PlantConfig& plant() const override { return plant_; }
    int size() const override { return static_cast<int>(pairs_.size()); }
    const Eigenpair& pair(int n) const override;
    double phi(int n, const Point& x) const override;
    double trace(int n, const Point& s) const override;
    int face_wavenumber(int count) const override;
    Eigen::MatrixXd trace_gram(int rows, int cols) const override;

    PhiJet phi_jet(int n, const Point& x) const;
    const std::vector<Eigenpair>& pairs() const { return pairs_; }

private:
    PlantConfig plant_;
    std::vector<Eigenpair> pairs_;
};

// All multi-indices with sum k_i^2 <= bound, sorted by lambda with
// lexicographic tie-break, truncated to `count`. Throws EnumerationError if
// the bound cannot guarantee the first `count` eigenvalues. Without a bound
// the ball starts at (2*count^(2/d) + 64) (L_max/L_min)^2 and doubles up to
// four times before giving up.
std::vector<Eigenpair> enumerate_eigenpairs(const PlantConfig& plant, int count,
                                            std::optional<double> bound = std::nullopt);

double separable_lambda(const PlantConfig& plant, const std::array<int, 3>& index);

// (c1, c2) = (1/mu_M, 1/mu_m).
std::pair<double, double> riesz_constants(const PlantConfig& plant);

struct UnstableInfo {
    int n0 = 0;
    std::vector<int> pattern;  // multiplicities of the groups with lambda <= delta
};

// Number of modes with lambda <= delta and their multiplicity pattern.
UnstableInfo count_unstable(const std::vector<Eigenpair>& eigs, double delta, bool allow_general_pattern = false);
UnstableInfo count_unstable(const EigenBasis& basis, double delta, bool allow_general_pattern = false);

}  // namespace parstab
