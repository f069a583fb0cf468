#include "mvcone/cones.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mvcone/errors.hpp"

namespace mvcone {

namespace {

void check_dimension(const ConvexCone& cone, const Vector& v) {
    if (v.size() != cone.dimension())
        throw DimensionMismatch("cone has dimension " + std::to_string(cone.dimension()) +
                                ", vector has " + std::to_string(v.size()));
}

}  // namespace

ConvexCone::ConvexCone(Kind kind, Eigen::Index n, Matrix rows)
    : kind_(kind), dimension_(n), rows_(std::move(rows)) {
    if (n < 1) throw std::invalid_argument("cone dimension must be positive");
    if (kind_ == Kind::polyhedral) {
        origin_only_ = true;
        for (Eigen::Index i = 0; i < n && origin_only_; ++i) {
            const Vector e = Vector::Unit(n, i);
            origin_only_ = polar_contains(e) && polar_contains(-e);
        }
    }
}

ConvexCone ConvexCone::whole_space(Eigen::Index n) { return ConvexCone(Kind::whole_space, n, Matrix(0, n)); }

ConvexCone ConvexCone::nonneg_orthant(Eigen::Index n) {
    return ConvexCone(Kind::nonneg_orthant, n, Matrix::Identity(n, n));
}

ConvexCone ConvexCone::half_space(Vector normal) {
    if (normal.size() == 0 || normal.norm() == 0.0)
        throw std::invalid_argument("half-space normal must be nonzero");
    const Eigen::Index n = normal.size();
    return ConvexCone(Kind::half_space, n, normal.transpose());
}

ConvexCone ConvexCone::polyhedral(Matrix rows) {
    if (rows.rows() == 0 || rows.cols() == 0) throw std::invalid_argument("polyhedral cone needs rows");
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        if (rows.row(i).norm() == 0.0) throw std::invalid_argument("polyhedral cone rows must be nonzero");
    const Eigen::Index n = rows.cols();
    return ConvexCone(Kind::polyhedral, n, std::move(rows));
}

bool ConvexCone::contains(const Vector& u, double tol) const {
    check_dimension(*this, u);
    if (rows_.rows() == 0) return true;
    return ((rows_ * u).array() >= -tol).all();
}

bool ConvexCone::polar_contains(const Vector& y, double tol) const {
    check_dimension(*this, y);
    switch (kind_) {
        case Kind::whole_space:
            return y.norm() <= tol;
        case Kind::nonneg_orthant:
            return (y.array() <= tol).all();
        case Kind::half_space: {
            const Vector a = normal();
            const double lambda = a.dot(y) / a.squaredNorm();
            return (y - lambda * a).norm() <= tol && lambda * a.norm() <= tol;
        }
        case Kind::polyhedral:
            // polar = {-A' mu : mu >= 0}
            return nnls(-rows_.transpose(), y).residual <= tol;
    }
    return false;
}

Vector ConvexCone::project(const Vector& v, const ProjectionOptions& opts) const {
    check_dimension(*this, v);
    switch (kind_) {
        case Kind::whole_space:
            return v;
        case Kind::nonneg_orthant:
            return v.cwiseMax(0.0);
        case Kind::half_space: {
            const Vector a = normal();
            const double slack = a.dot(v);
            if (slack >= 0.0) return v;
            return v - (slack / a.squaredNorm()) * a;
        }
        case Kind::polyhedral:
            if (origin_only_) return Vector::Zero(dimension_);
            if (opts.method == ProjectionOptions::Method::moreau_nnls) return moreau_projection(rows_, v);
            return dykstra_projection(rows_, v, opts);
    }
    return v;
}

std::string to_string(ConvexCone::Kind kind) {
    switch (kind) {
        case ConvexCone::Kind::whole_space: return "whole_space";
        case ConvexCone::Kind::nonneg_orthant: return "orthant";
        case ConvexCone::Kind::half_space: return "half_space";
        case ConvexCone::Kind::polyhedral: return "polyhedral";
    }
    return "unknown";
}

std::string ConvexCone::describe() const {
    std::ostringstream os;
    os << to_string(kind_) << "(n=" << dimension_;
    if (kind_ == Kind::half_space || kind_ == Kind::polyhedral) os << ", m=" << rows_.rows();
    os << ")";
    return os.str();
}

ConvexCone construct_tcie_cone(const Vector& mean_excess) {
    if (mean_excess.size() == 0 || mean_excess.norm() == 0.0) throw ZeroMeanExcess();
    ConvexCone cone = ConvexCone::half_space(mean_excess);
    if (!cone.dual_contains(mean_excess, kMembershipTol * std::max(1.0, mean_excess.norm())))
        throw ConsistencyError("constructed cone does not have the mean excess return in its dual");
    return cone;
}

namespace {

// Dykstra only approaches the answer linearly. Once it has settled, the rows
// with nonzero increments are the active constraints; the exact projection
// onto their common null space is the answer whenever it is feasible and has
// nonnegative multipliers.
Vector polish_on_active_face(const Matrix& rows, const Vector& v, const Matrix& increments, const Vector& x) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        if (increments.col(i).squaredNorm() > 0.0) active.push_back(i);
    if (active.empty()) return x;
    Matrix at(rows.cols(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) at.col(static_cast<Eigen::Index>(k)) = rows.row(active[k]).transpose();
    const Eigen::ColPivHouseholderQR<Matrix> qr(at);
    // p = v - (component of v in the span of the active rows)
    const Eigen::Index rank = qr.rank();
    const Matrix q = qr.householderQ() * Matrix::Identity(rows.cols(), rank);
    const Vector p = v - q * (q.transpose() * v);
    const Vector multipliers = qr.solve(Vector(p - v));
    const double scale = std::max(1.0, v.norm());
    const double tol = 1e-12 * scale;
    if ((rows * p).minCoeff() < -tol * rows.rowwise().norm().maxCoeff()) return x;
    if (multipliers.size() > 0 && multipliers.minCoeff() < -tol) return x;
    if ((at.transpose() * p).cwiseAbs().maxCoeff() > tol * rows.rowwise().norm().maxCoeff()) return x;
    return p;
}

}  // namespace

Vector dykstra_projection(const Matrix& rows, const Vector& v, const ProjectionOptions& opts) {
    const Eigen::Index m = rows.rows();
    if (rows.cols() != v.size()) throw DimensionMismatch("dykstra: dimension mismatch");
    if (m == 0) return v;

    std::vector<double> inv_norm2(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) inv_norm2[static_cast<std::size_t>(i)] = 1.0 / rows.row(i).squaredNorm();

    Vector x = v;
    Matrix increments = Matrix::Zero(v.size(), m);
    Vector before(v.size());
    Vector y(v.size());
    const double scale = std::max(1.0, v.norm());
    double change = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        before = x;
        for (Eigen::Index i = 0; i < m; ++i) {
            y = x + increments.col(i);
            const double slack = rows.row(i).dot(y);
            Vector projected = y;
            if (slack < 0.0) projected.noalias() -= (slack * inv_norm2[static_cast<std::size_t>(i)]) * rows.row(i).transpose();
            increments.col(i) = y - projected;
            x = projected;
        }
        change = (x - before).norm();
        if (change <= opts.tol * scale) {
            const double violation = (rows * x).minCoeff();
            if (violation >= -opts.tol * scale * rows.rowwise().norm().maxCoeff())
                return polish_on_active_face(rows, v, increments, x);
        }
    }
    throw NoConvergence("dykstra projection did not converge", opts.max_iter, change, x);
}

Vector moreau_projection(const Matrix& rows, const Vector& v) {
    if (rows.cols() != v.size()) throw DimensionMismatch("moreau_projection: dimension mismatch");
    if (rows.rows() == 0) return v;
    // polar = {-A' mu : mu >= 0}; its projection of v is -A' mu*.
    const NnlsResult polar = nnls(-rows.transpose(), v);
    return v + rows.transpose() * polar.x;
}

NnlsResult nnls(const Matrix& E, const Vector& f, int max_iter) {
    const Eigen::Index n = E.cols();
    if (E.rows() != f.size()) throw DimensionMismatch("nnls: dimension mismatch");
    if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

    Vector x = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * E.norm() * std::max<Eigen::Index>(n, E.rows()) *
                       std::max(1.0, f.norm());

    auto solve_passive = [&](Vector& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        z = Vector::Zero(n);
        if (idx.empty()) return;
        Matrix Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) Ep.col(static_cast<Eigen::Index>(k)) = E.col(idx[k]);
        const Vector zp = Ep.colPivHouseholderQr().solve(f);
        for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[static_cast<Eigen::Index>(k)];
    };

    for (int outer = 0; outer < max_iter; ++outer) {
        const Vector w = E.transpose() * (f - E * x);
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        Vector z;
        for (int inner = 0; inner <= n; ++inner) {
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) feasible = false;
            if (feasible) break;
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) {
                    const double denom = x[j] - z[j];
                    if (denom > 0.0) alpha = std::min(alpha, x[j] / denom);
                }
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x[j] = 0.0;
                }
            }
        }
        x = z.cwiseMax(0.0);
    }
    return {x, (E * x - f).norm()};
}

}  // namespace mvcone
