#include "trimstokes/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trimstokes {

KnotVector make_open_knot_vector(int k, int alpha, std::span<const double> breakpoints)
{
    if (k < 1) {
        throw InvalidArgument("knot vector degree must be >= 1");
    }
    if (alpha < 0 || alpha > k - 1) {
        throw InvalidArgument("regularity must satisfy 0 <= alpha <= k-1");
    }
    if (breakpoints.size() < 2) {
        throw InvalidArgument("at least two breakpoints are required");
    }
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
        throw InvalidArgument("breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1])) {
            throw InvalidArgument("breakpoints must be strictly increasing");
        }
    }

    KnotVector kv;
    kv.degree_ = k;
    kv.regularity_ = alpha;
    kv.breakpoints_.assign(breakpoints.begin(), breakpoints.end());
    const int m = k - alpha;
    kv.knots_.assign(static_cast<std::size_t>(k + 1), 0.0);
    for (std::size_t i = 1; i + 1 < breakpoints.size(); ++i) {
        kv.knots_.insert(kv.knots_.end(), static_cast<std::size_t>(m), breakpoints[i]);
    }
    kv.knots_.insert(kv.knots_.end(), static_cast<std::size_t>(k + 1), 1.0);

    const Index nel = static_cast<Index>(breakpoints.size()) - 1;
    kv.element_span_.resize(static_cast<std::size_t>(nel));
    for (Index e = 0; e < nel; ++e) {
        kv.element_span_[static_cast<std::size_t>(e)] = k + e * m;
    }
    return kv;
}

std::vector<double> uniform_breakpoints(Index num_elements)
{
    if (num_elements < 1) {
        throw InvalidArgument("number of elements must be positive");
    }
    std::vector<double> z(static_cast<std::size_t>(num_elements + 1));
    for (Index i = 0; i <= num_elements; ++i) {
        z[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(num_elements);
    }
    z.back() = 1.0;
    return z;
}

KnotVector uniform_refine(const KnotVector& kv, int levels)
{
    if (levels < 0) {
        throw InvalidArgument("refinement levels must be >= 0");
    }
    std::vector<double> z = kv.breakpoints();
    for (int l = 0; l < levels; ++l) {
        std::vector<double> fine;
        fine.reserve(2 * z.size());
        for (std::size_t i = 0; i + 1 < z.size(); ++i) {
            fine.push_back(z[i]);
            fine.push_back(0.5 * (z[i] + z[i + 1]));
        }
        fine.push_back(z.back());
        z = std::move(fine);
    }
    return make_open_knot_vector(kv.degree(), kv.regularity(), z);
}

Index KnotVector::element_of(double x) const
{
    if (!(x >= 0.0 && x <= 1.0)) {
        throw InvalidArgument("evaluation point outside [0,1]");
    }
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    Index e = static_cast<Index>(it - breakpoints_.begin()) - 1;
    return std::clamp<Index>(e, 0, num_elements() - 1);
}

Index KnotVector::span_of_element(Index e) const
{
    return element_span_.at(static_cast<std::size_t>(e));
}

std::array<Index, 2> KnotVector::support_elements(Index i) const
{
    const double a = knots_[static_cast<std::size_t>(i)];
    const double b = knots_[static_cast<std::size_t>(i + degree_ + 1)];
    auto lo = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), a);
    auto hi = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), b);
    return {static_cast<Index>(lo - breakpoints_.begin()),
            static_cast<Index>(hi - breakpoints_.begin()) - 1};
}

BasisValues KnotVector::eval(double x, int nderiv) const
{
    return eval_on_element(element_of(x), x, nderiv);
}

BasisValues KnotVector::eval_on_element(Index e, double x, int nderiv) const
{
    // Derivatives of the nonzero B-splines (de Boor's triangular scheme).
    const int p = degree_;
    const Index span = span_of_element(e);
    const auto& U = knots_;
    const auto knot = [&](Index i) { return U[static_cast<std::size_t>(i)]; };

    Eigen::MatrixXd ndu(p + 1, p + 1);
    std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<std::size_t>(j)] = x - knot(span + 1 - j);
        right[static_cast<std::size_t>(j)] = knot(span + j) - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        ndu(j, j) = saved;
    }

    BasisValues out;
    out.first = span - p;
    out.ders = Eigen::MatrixXd::Zero(nderiv + 1, p + 1);
    for (int j = 0; j <= p; ++j) {
        out.ders(0, j) = ndu(j, p);
    }
    const int nd = std::min(nderiv, p);
    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a.setZero();
        a(0, 0) = 1.0;
        for (int kk = 1; kk <= nd; ++kk) {
            double d = 0.0;
            const int rk = r - kk;
            const int pk = p - kk;
            if (r >= kk) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? kk - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, kk) = -a(s1, kk - 1) / ndu(pk + 1, r);
                d += a(s2, kk) * ndu(r, pk);
            }
            out.ders(kk, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int kk = 1; kk <= nd; ++kk) {
        for (int j = 0; j <= p; ++j) {
            out.ders(kk, j) *= factor;
        }
        factor *= (p - kk);
    }
    return out;
}

Eigen::VectorXd refine_coefficients(const KnotVector& coarse, const KnotVector& fine,
                                    const Eigen::VectorXd& coeffs)
{
    if (coarse.degree() != fine.degree()) {
        throw InvalidArgument("refinement requires equal degrees");
    }
    const int p = coarse.degree();
    std::vector<double> U = coarse.knots();
    std::vector<double> P(coeffs.data(), coeffs.data() + coeffs.size());

    // Knots of `fine` not in `coarse` (multiset difference).
    std::vector<double> to_insert;
    {
        const auto& F = fine.knots();
        std::size_t i = 0;
        for (double f : F) {
            if (i < U.size() && U[i] == f) {
                ++i;
            } else {
                to_insert.push_back(f);
            }
        }
        if (i != U.size()) {
            throw InvalidArgument("fine knot vector does not contain the coarse one");
        }
    }

    // Boehm insertion, one knot at a time.
    for (double t : to_insert) {
        const auto it = std::upper_bound(U.begin() + p, U.end() - p - 1, t);
        const Index kspan = static_cast<Index>(it - U.begin()) - 1;
        std::vector<double> Q(P.size() + 1);
        for (Index i = 0; i <= kspan - p; ++i) {
            Q[static_cast<std::size_t>(i)] = P[static_cast<std::size_t>(i)];
        }
        for (Index i = kspan - p + 1; i <= kspan; ++i) {
            const double ui = U[static_cast<std::size_t>(i)];
            const double uip = U[static_cast<std::size_t>(i + p)];
            const double a = (t - ui) / (uip - ui);
            Q[static_cast<std::size_t>(i)] =
                a * P[static_cast<std::size_t>(i)] + (1.0 - a) * P[static_cast<std::size_t>(i - 1)];
        }
        for (Index i = kspan + 1; i < static_cast<Index>(Q.size()); ++i) {
            Q[static_cast<std::size_t>(i)] = P[static_cast<std::size_t>(i - 1)];
        }
        U.insert(U.begin() + kspan + 1, t);
        P = std::move(Q);
    }
    return Eigen::Map<Eigen::VectorXd>(P.data(), static_cast<Index>(P.size()));
}

double eval_spline(const KnotVector& kv, const Eigen::VectorXd& coeffs, double x)
{
    const BasisValues b = kv.eval(x, 0);
    double s = 0.0;
    for (int j = 0; j <= kv.degree(); ++j) {
        s += coeffs(b.first + j) * b.ders(0, j);
    }
    return s;
}

TensorSplineSpace::TensorSplineSpace(KnotVector u, KnotVector v)
    : dirs_{std::move(u), std::move(v)}
{
}

double TensorSplineSpace::shape_regularity() const
{
    double worst = std::numeric_limits<double>::infinity();
    const auto& zx = dirs_[0].breakpoints();
    const auto& zy = dirs_[1].breakpoints();
    for (std::size_t i = 0; i + 1 < zx.size(); ++i) {
        for (std::size_t j = 0; j + 1 < zy.size(); ++j) {
            const double a = zx[i + 1] - zx[i];
            const double b = zy[j + 1] - zy[j];
            worst = std::min(worst, std::min(a, b) / std::hypot(a, b));
        }
    }
    return worst;
}

} // namespace trimstokes
