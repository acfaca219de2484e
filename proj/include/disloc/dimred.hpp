#pragma once

#include "disloc/probe.hpp"

#include <array>
#include <functional>
#include <memory>

namespace disloc {

using Vec3 = Eigen::Vector3d;

// phi(x3) = A (1 - t^2)^p, t = (x3 - center) / half_width, zero outside.
struct CutoffProfile {
    double center = 0.0;
    double half_width = 0.5;
    double amplitude = 1.0;
    int power = 4;

    double value(double x3) const;
    double d1(double x3) const;
    double d2(double x3) const;
    // moments by Gauss-Legendre over the support
    double integral() const;
    double moment_d1() const;
    double moment_d2() const;

    // A chosen so that the integral is `mass`
    static CutoffProfile normalized(double center, double half_width, int power = 4, double mass = 1.0);
    // half width min(M/2, edge_length/4)
    static CutoffProfile for_slab(double center, double slab_M, double edge_length, int power = 4);
    void check_inside_slab(double slab_M) const;
};

// Complex 3-vector field with analytic derivatives. grad(i, j) = d u_i / d x_j,
// hess[k](i, j) = d^2 u_i / (d x_j d x_k).
class Field3D {
public:
    virtual ~Field3D() = default;
    virtual CVec3 value(const Vec3& x) const = 0;
    virtual CMat3 gradient(const Vec3& x) const = 0;
    virtual std::array<CMat3, 3> hessian(const Vec3& x) const = 0;
};

// mu Lap u + (lambda + mu) grad div u + omega^2 u
CVec3 lame3d_residual(const Field3D& u, const Vec3& x, const LameParameters& lame, double omega);

// a exp(k . x), complex k and a
class PlaneWave3D final : public Field3D {
public:
    PlaneWave3D(CVec3 a, CVec3 k) : a_(std::move(a)), k_(std::move(k)) {}
    CVec3 value(const Vec3& x) const override;
    CMat3 gradient(const Vec3& x) const override;
    std::array<CMat3, 3> hessian(const Vec3& x) const override;

    // Shear wave: a . k = 0, mu k.k + omega^2 = 0 (bilinear). k3 = i kz; in-plane
    // direction e (unit); amplitude orthogonal to k.
    static PlaneWave3D shear(double kz, const Vec2& e, double omega, const LameParameters& lame, Complex amp = 1.0);
    // Pressure wave: a parallel to k, (lambda + 2 mu) k.k + omega^2 = 0.
    static PlaneWave3D pressure(double kz, const Vec2& e, double omega, const LameParameters& lame, Complex amp = 1.0);

private:
    CVec3 a_, k_;
};

// 2D field (u1, u2) extruded in x3 with an extruded scalar third component.
class ExtrudedField final : public Field3D {
public:
    ExtrudedField(std::shared_ptr<const VectorField> inplane, std::function<Complex(const Vec2&)> u3,
                  std::function<CVec2(const Vec2&)> grad_u3, std::function<CMat2(const Vec2&)> hess_u3)
        : inplane_(std::move(inplane)), u3_(std::move(u3)), g3_(std::move(grad_u3)), h3_(std::move(hess_u3)) {}
    CVec3 value(const Vec3& x) const override;
    CMat3 gradient(const Vec3& x) const override;
    std::array<CMat3, 3> hessian(const Vec3& x) const override;

private:
    std::shared_ptr<const VectorField> inplane_;
    std::function<Complex(const Vec2&)> u3_;
    std::function<CVec2(const Vec2&)> g3_;
    std::function<CMat2(const Vec2&)> h3_;
};

class SumField3D final : public Field3D {
public:
    void add(std::shared_ptr<const Field3D> f, Complex w) { parts_.push_back({std::move(f), w}); }
    CVec3 value(const Vec3& x) const override;
    CMat3 gradient(const Vec3& x) const override;
    std::array<CMat3, 3> hessian(const Vec3& x) const override;

private:
    std::vector<std::pair<std::shared_ptr<const Field3D>, Complex>> parts_;
};

// P(h)(x') = int phi(x3) h(x', x3) dx3 over the support, n-point Gauss-Legendre.
Complex dimension_reduce(const std::function<Complex(double)>& h_of_x3, const CutoffProfile& phi, int n = 128);
CVec3 dimension_reduce(const Field3D& u, const Vec2& xp, const CutoffProfile& phi, int n = 128);

struct ReducedResidual {
    CVec2 res_12 = CVec2::Zero();  // hat-Lame P(u') + omega^2 P(u') - G^(1,2)
    Complex res_3 = 0.0;           // mu Lap' P(u3) + omega^2 P(u3) - G^(3)
    CVec2 G_12 = CVec2::Zero();
    Complex G_3 = 0.0;
    double scale = 0.0;            // magnitude of the largest operator term
    // The same residuals with lambda and mu exchanged on the diagonal, as the
    // splitting is sometimes written; nonzero for generic fields.
    CVec2 swapped_res_12 = CVec2::Zero();
    Complex swapped_res_3 = 0.0;
};

// Evaluates the reduced systems at x' for one field. Throws if the 3D residual
// at sample points of the slab exceeds tol_3d (relative).
ReducedResidual reduced_residual(const Field3D& u, const Vec2& xp, const CutoffProfile& phi,
                                 const LameParameters& lame, double omega, int n = 128, double tol_3d = 1e-8);

struct ReducedResiduals {
    ReducedResidual v, w;
    double max_relative = 0.0;
};
ReducedResiduals reduced_residuals(const Field3D& v, const Field3D& w, const Vec2& xp, const CutoffProfile& phi,
                                   const LameParameters& lame, double omega, int n = 128);

// Scalar jump data on a corner edge (distance r from the corner).
struct ScalarEdgeData {
    std::function<Complex(double)> f, g;
    Complex f0 = 0.0, df0 = 0.0, g0 = 0.0;
    static ScalarEdgeData constant(Complex f, Complex g);
    static ScalarEdgeData expansion(Complex f0, Complex df0, Complex c, double p, Complex g0, Complex cg = 0.0,
                                    double q = 1.0);
};

// Third-component identity with the harmonic CGO exp(-sqrt(s z)):
// lhs = i P(df3) + (2 / s) sum G0 / Z^2, with G = P(g3) / mu, F = P(f3).
struct ScalarIdentityTerms {
    Complex lhs;
    Complex edge_pairing;            // sum over edges of int (G u0 - F d_nu u0)
    std::map<int, Complex> R;        // 1, 2: G tails; 3: edge pairing; 4: F tails; 6, 7: delta F; 8, 9: delta G; 10, 11: F' terms
    Complex residual() const;
};
ScalarIdentityTerms scalar_identity(const CornerSetup& c, const ScalarEdgeData& plus, const ScalarEdgeData& minus,
                                    double s, double mass, double rel_tol = 1e-11);

struct ThirdComponentRecovery {
    Complex delta_Pf3 = 0.0;   // P(f3+) - P(f3-)
    double delta_Pf3_error = 0.0;
    bool stage_b = false;      // g3 estimates valid
    std::string diagnostic;
    Complex Pg3_plus = 0.0, Pg3_minus = 0.0;  // P(g3) at the corner on each edge
    double g3_error = 0.0;
    bool inconclusive = false;
    std::vector<double> s_values;
};

// sh_sweep values are divided by h.
ThirdComponentRecovery recover_third_component(const CornerSetup& c, const ScalarEdgeData& plus,
                                               const ScalarEdgeData& minus, double mass,
                                               const std::vector<double>& sh_sweep = {1024, 2048, 4096, 8192},
                                               double jump_tol = 5e-3);

struct EdgeData3 {
    EdgeData inplane;
    ScalarEdgeData third;
};

struct Recovery3D {
    CVec2 delta_Pf12 = CVec2::Zero();
    Complex delta_Pf3 = 0.0;
    CVec2 delta_f12 = CVec2::Zero();  // normalized by the profile mass
    Complex delta_f3 = 0.0;
    double jump_error = 0.0;
    RotationRecovery rotation;         // on normalized in-plane data
    ThirdComponentRecovery third;
    Complex g3_plus = 0.0, g3_minus = 0.0;  // normalized
    double mass = 0.0;
};

// Data independent of x3, so P multiplies each corner quantity by the profile mass.
Recovery3D recover_jump_3d(const CornerSetup& c, const EdgeData3& plus, const EdgeData3& minus,
                           const CutoffProfile& phi);

// Z(theta) = e^{i theta / 2}
inline Complex Z_function(double theta) { return std::exp(kI * (theta / 2.0)); }

}  // namespace disloc
