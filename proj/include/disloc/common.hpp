#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace disloc {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using CVec2 = Eigen::Vector2cd;
using CMat2 = Eigen::Matrix2cd;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

constexpr double kPi = 3.14159265358979323846;
constexpr Complex kI{0.0, 1.0};

// Bad input: geometry, parameters, configuration. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg, std::string pointer = "")
        : std::runtime_error(msg), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

// Solver or quadrature failure. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LameParameters {
    double lambda = 1.0;
    double mu = 1.0;
    bool operator==(const LameParameters& o) const { return lambda == o.lambda && mu == o.mu; }
    bool operator!=(const LameParameters& o) const { return !(*this == o); }
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline Vec2 perp_ccw(const Vec2& v) { return Vec2(-v.y(), v.x()); }
inline CVec2 perp_ccw(const CVec2& v) { return CVec2(-v.y(), v.x()); }
inline Mat2 rotation(double a) {
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

// Bilinear (non-conjugating) dot product; the identities pair fields without conjugation.
inline Complex bdot(const CVec2& a, const CVec2& b) { return a(0) * b(0) + a(1) * b(1); }

// grad(i, j) = d u_i / d x_j.  T_nu u = lambda (div u) nu + mu (grad + grad^T) nu.
inline CVec2 traction(const CMat2& grad, const Vec2& nu, const LameParameters& p) {
    const Complex div = grad(0, 0) + grad(1, 1);
    const CVec2 n = nu.cast<Complex>();
    return p.lambda * div * n + p.mu * (grad + grad.transpose()) * n;
}

}  // namespace disloc
