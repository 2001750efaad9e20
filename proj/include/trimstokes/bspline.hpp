#pragma once

// Univariate open knot vectors and their tensor products.
//
// Conventions: basis functions are indexed 0..n-1, elements (breakpoint
// intervals) 0..M-2. Evaluation returns only the k+1 functions that are
// nonzero on the relevant interval; the first of them has index
// `first = span - k`.

#include "trimstokes/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace trimstokes {

/// Values and derivatives of the k+1 nonzero B-splines at one point.
/// `ders(d, j)` is the d-th derivative of basis function `first + j`.
struct BasisValues {
    Index first = 0;
    Eigen::MatrixXd ders;
};

class KnotVector {
public:
    KnotVector() = default;

    int degree() const { return degree_; }
    int regularity() const { return regularity_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    /// Number of basis functions n.
    Index size() const { return static_cast<Index>(knots_.size()) - degree_ - 1; }
    /// Number of breakpoint intervals M-1.
    Index num_elements() const { return static_cast<Index>(breakpoints_.size()) - 1; }

    /// Interval containing x; x == 1 belongs to the last interval.
    Index element_of(double x) const;
    /// Knot span index of element e (last knot index with knot == zeta_e).
    Index span_of_element(Index e) const;
    /// First basis function nonzero on element e.
    Index first_on_element(Index e) const { return span_of_element(e) - degree_; }

    /// Elements [first, last] covered by the support of basis function i.
    std::array<Index, 2> support_elements(Index i) const;

    /// Evaluate the nonzero functions at x in [0,1] (span found from x).
    BasisValues eval(double x, int nderiv) const;
    /// Evaluate the polynomial pieces living on element e at x (x may lie
    /// slightly outside the element: the element's polynomials are continued).
    BasisValues eval_on_element(Index e, double x, int nderiv) const;

private:
    friend KnotVector make_open_knot_vector(int, int, std::span<const double>);

    int degree_ = 0;
    int regularity_ = 0;
    std::vector<double> knots_;
    std::vector<double> breakpoints_;
    std::vector<Index> element_span_;
};

/// Open knot vector: boundary knots repeated k+1 times, internal breakpoints
/// repeated k - alpha times.
KnotVector make_open_knot_vector(int k, int alpha, std::span<const double> breakpoints);

/// M equispaced breakpoints on [0,1] with `num_elements` intervals.
std::vector<double> uniform_breakpoints(Index num_elements);

/// Bisect every breakpoint interval `levels` times, preserving degree and regularity.
KnotVector uniform_refine(const KnotVector& kv, int levels);

/// Knot insertion: coefficients of a coarse-space function in the refined space.
/// `fine` must contain `coarse` (same degree, nested breakpoints, multiplicities
/// not decreasing).
Eigen::VectorXd refine_coefficients(const KnotVector& coarse, const KnotVector& fine,
                                    const Eigen::VectorXd& coeffs);

/// Evaluate sum_i c_i B_i(x).
double eval_spline(const KnotVector& kv, const Eigen::VectorXd& coeffs, double x);

/// Tensor product of two univariate spaces on the parametric unit square.
class TensorSplineSpace {
public:
    TensorSplineSpace() = default;
    TensorSplineSpace(KnotVector u, KnotVector v);

    const KnotVector& dir(int d) const { return dirs_[static_cast<std::size_t>(d)]; }
    Index size() const { return dirs_[0].size() * dirs_[1].size(); }
    Index size(int d) const { return dir(d).size(); }
    Index num_elements(int d) const { return dir(d).num_elements(); }
    Index num_elements() const { return num_elements(0) * num_elements(1); }

    /// Row-major global index of the tensor function (i, j).
    Index index(Index i, Index j) const { return i + dirs_[0].size() * j; }

    /// Smallest-edge / diameter ratio over all parametric elements.
    double shape_regularity() const;

private:
    std::array<KnotVector, 2> dirs_;
};

} // namespace trimstokes
