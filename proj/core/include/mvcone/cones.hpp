#pragma once

#include <string>

#include <Eigen/Dense>

namespace mvcone {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kMembershipTol = 1e-9;

struct ProjectionOptions {
    enum class Method {
        dykstra,
        /// v = P_cone(v) + P_polar(v) with the polar part from an NNLS
        /// solve; finite, and exact up to rounding even at cone vertices.
        moreau_nnls,
    };
    Method method = Method::dykstra;
    double tol = 1e-10;
    int max_iter = 10000;
};

/// Closed convex cone of admissible controls, {u : A u >= 0} in all four
/// variants (the whole space has no rows, the orthant has A = I).
class ConvexCone {
public:
    enum class Kind { whole_space, nonneg_orthant, half_space, polyhedral };

    static ConvexCone whole_space(Eigen::Index n);
    static ConvexCone nonneg_orthant(Eigen::Index n);
    /// {u : normal' u >= 0}; throws std::invalid_argument for a zero normal.
    static ConvexCone half_space(Vector normal);
    /// {u : A u >= 0}; throws std::invalid_argument for a zero row.
    static ConvexCone polyhedral(Matrix rows);

    Kind kind() const noexcept { return kind_; }
    Eigen::Index dimension() const noexcept { return dimension_; }

    /// Constraint rows A (m x n). Empty for the whole space.
    const Matrix& rows() const noexcept { return rows_; }

    /// Half-space normal; only meaningful for Kind::half_space.
    Vector normal() const { return rows_.row(0).transpose(); }

    bool contains(const Vector& u, double tol = kMembershipTol) const;

    /// Membership in the polar cone {y : y'x <= 0 for all x in the cone}.
    bool polar_contains(const Vector& y, double tol = kMembershipTol) const;

    /// Membership in the dual cone, which is the negated polar cone.
    bool dual_contains(const Vector& y, double tol = kMembershipTol) const {
        return polar_contains(-y, tol);
    }

    /// Euclidean projection onto the cone. Closed form except for the
    /// polyhedral kind, which uses `opts.method`; Dykstra may throw
    /// NoConvergence.
    Vector project(const Vector& v, const ProjectionOptions& opts = {}) const;

    /// True when the cone is {0}, i.e. its polar is the whole space.
    bool is_origin_only() const noexcept { return origin_only_; }

    std::string describe() const;

private:
    ConvexCone(Kind kind, Eigen::Index n, Matrix rows);

    Kind kind_;
    Eigen::Index dimension_;
    Matrix rows_;
    bool origin_only_ = false;
};

std::string to_string(ConvexCone::Kind kind);

/// Half-space {u : mean_excess' u >= 0}: the largest cone whose dual
/// contains `mean_excess`. Throws ZeroMeanExcess for a zero vector.
ConvexCone construct_tcie_cone(const Vector& mean_excess);

/// Dykstra projection of `v` onto {u : rows u >= 0}.
Vector dykstra_projection(const Matrix& rows, const Vector& v, const ProjectionOptions& opts = {});

/// Projection onto {u : rows u >= 0} through the Moreau decomposition.
Vector moreau_projection(const Matrix& rows, const Vector& v);

/// Nonnegative least squares min ||E x - f|| s.t. x >= 0 (Lawson-Hanson).
struct NnlsResult {
    Vector x;
    double residual = 0.0;
};
NnlsResult nnls(const Matrix& E, const Vector& f, int max_iter = 0);

}  // namespace mvcone
