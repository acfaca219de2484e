#include "disloc/experiments.hpp"

#include "disloc/dimred.hpp"
#include "disloc/quadrature.hpp"

#include <spdlog/spdlog.h>

#include <boost/math/special_functions/gamma.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>

namespace disloc {

// ---------------------------------------------------------------- output plumbing

std::string format_csv(const Table& t) {
    std::string s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
    s += "\n";
    char buf[40];
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            s += (i ? "," : "");
            s += buf;
        }
        s += "\n";
    }
    return s;
}

Check make_check(std::string name, double value, std::string relation, double threshold, std::string note) {
    Check c{std::move(name), value, threshold, relation, false, false, std::move(note)};
    if (relation == "<") c.pass = value < threshold;
    else if (relation == "<=") c.pass = value <= threshold;
    else if (relation == ">") c.pass = value > threshold;
    else if (relation == ">=") c.pass = value >= threshold;
    else throw std::logic_error("unknown relation " + relation);
    if (std::isnan(value)) c.pass = false;
    return c;
}

namespace {
Check supplementary(Check c) {
    c.supplementary = true;
    return c;
}
}  // namespace

bool ExperimentOutput::pass() const {
    for (const auto& c : checks)
        if (!c.supplementary && !c.pass) return false;
    return true;
}

json ExperimentOutput::report(std::uint64_t seed) const {
    json j;
    j["schema"] = "report_v1";
    j["kind"] = kind;
    j["seed"] = seed;
    j["pass"] = pass();
    j["seconds"] = seconds;
    j["results"] = results;
    json cs = json::array();
    for (const auto& c : checks) {
        json x{{"name", c.name},   {"value", c.value},          {"relation", c.relation}, {"threshold", c.threshold},
               {"pass", c.pass},   {"supplementary", c.supplementary}};
        if (!c.note.empty()) x["note"] = c.note;
        cs.push_back(x);
    }
    j["checks"] = cs;
    json ts = json::array();
    for (const auto& t : tables) ts.push_back(t.name + ".csv");
    j["tables"] = ts;
    return j;
}

void write_outputs(const ExperimentOutput& out, std::uint64_t seed, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "report.json");
        f << out.report(seed).dump(2) << "\n";
        if (!f) throw ValidationError("cannot write " + (dir / "report.json").string());
    }
    for (const auto& t : out.tables) {
        std::ofstream f(dir / (t.name + ".csv"), std::ios::binary);
        f << format_csv(t);
        if (!f) throw ValidationError("cannot write " + (dir / (t.name + ".csv")).string());
    }
}

namespace {

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }
json vjson(const Vec2& v) { return json::array({v.x(), v.y()}); }

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::uint64_t seed_of(const ConfigNode& n, const RunContext& ctx) {
    if (ctx.seed) return *ctx.seed;
    if (!n.has("seed")) n.fail("randomized experiment needs a \"seed\"");
    const auto s = n.at("seed");
    if (!s.raw().is_number_unsigned() && !(s.raw().is_number_integer() && s.raw().get<long long>() >= 0))
        s.fail("seed must be a non-negative integer");
    return s.raw().get<std::uint64_t>();
}

std::shared_ptr<ElasticCgo> parse_cgo(const ConfigNode& n, double omega, const LameParameters& lame) {
    auto p = ElasticCgoParams::make(n.at("tau").positive(), n.at("d").vec2(), n.has("xc") ? n.at("xc").vec2() : Vec2::Zero(),
                                    omega, lame);
    try {
        p.validate();
    } catch (const ValidationError& e) {
        n.fail(e.what());
    }
    return std::make_shared<ElasticCgo>(p);
}

Complex parse_weight(const ConfigNode& n) {
    if (!n.has("weight")) return 1.0;
    const Vec2 w = n.at("weight").vec2();
    return Complex(w.x(), w.y());
}

SumField parse_field_sum(const ConfigNode& arr, double omega, const LameParameters& lame) {
    SumField D;
    for (std::size_t i = 0; i < arr.size(); ++i) D.add(parse_cgo(arr.at(i), omega, lame), parse_weight(arr.at(i)));
    return D;
}

CornerSetup parse_corner(const ConfigNode& n, double theta) {
    CornerSetup c;
    c.theta = theta;
    if (!(theta > 0.0 && theta < kPi)) n.fail("corner opening must lie in (0, pi)");
    c.h = n.at("h").positive();
    c.lame = parse_lame(n.at("lame"));
    c.omega = n.number_or("omega", 0.0);
    return c;
}

// ---------------------------------------------------------------- cgo_check

ExperimentOutput run_cgo_check(const ConfigNode& n, const Thresholds& th, const RunContext& ctx) {
    ExperimentOutput out;
    const std::uint64_t seed = seed_of(n, ctx);
    const int draws = n.integer_or("draws", 50);
    const int points = n.integer_or("points", 100);
    if (draws < 1 || points < 1) n.fail("draws and points must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double res_el = 0, res_h = 0, res_lz = 0, xi_eta = 0, eta_dev = 0, eta_max = 0;
    Table t{"cgo_draws", {"draw", "family", "max_rel_residual"}, {}};

    for (int k = 0; k < draws; ++k) {
        const LameParameters lame{0.5 + 2.5 * U(rng), 0.5 + 2.5 * U(rng)};
        const double omega = 3.0 * U(rng);
        const double ks = omega / std::sqrt(lame.mu);
        const double tau = ks + 0.5 + 9.5 * U(rng);
        const double a = 2.0 * kPi * U(rng);
        const Vec2 xc(U(rng), U(rng));
        const ElasticCgo u(ElasticCgoParams::make(tau, Vec2(std::cos(a), std::sin(a)), xc, omega, lame));
        const double xe = std::abs(bdot(u.xi(), u.eta())) / (u.xi().norm() * u.eta().norm());
        xi_eta = std::max(xi_eta, xe);
        const double en = u.eta().norm();
        eta_dev = std::max(eta_dev, std::abs(en - std::sqrt(2.0 + ks * ks / (tau * tau))));
        eta_max = std::max(eta_max, en);
        double r1 = 0.0;
        for (int p = 0; p < points; ++p) {
            const Vec2 x = xc + Vec2(U(rng) - 0.5, U(rng) - 0.5);
            const CVec2 res = lame_operator(u, x, lame) + omega * omega * u.value(x);
            const auto H = u.hessian(x);
            const double scale =
                (lame.lambda + 2.0 * lame.mu) * std::max(H[0].norm(), H[1].norm()) + omega * omega * u.value(x).norm();
            r1 = std::max(r1, res.norm() / scale);
        }
        res_el = std::max(res_el, r1);
        t.rows.push_back({double(k), 0.0, r1});

        const double s = 1.0 + 99.0 * U(rng);
        const CornerFrame frame{Vec2(U(rng), U(rng)), 2.0 * kPi * U(rng)};
        const HarmonicCgo hc(s, frame);
        double r2 = 0.0;
        for (int p = 0; p < points; ++p) {
            const double r = 0.01 + 0.99 * U(rng);
            const double phi = -kPi + 0.05 + (2.0 * kPi - 0.1) * U(rng);
            const Vec2 x = frame.to_global(r * Vec2(std::cos(phi), std::sin(phi)));
            const Complex z = std::polar(r, phi), rz = std::sqrt(z);
            const Complex fpp = (s / (4.0 * z) + std::sqrt(s) / (4.0 * z * rz)) * std::exp(-std::sqrt(s) * rz);
            r2 = std::max(r2, std::abs(hc.laplacian(x)) / (2.0 * std::abs(fpp)));
        }
        res_h = std::max(res_h, r2);
        t.rows.push_back({double(k), 1.0, r2});

        const double sl = 1.0 + 19.0 * U(rng);
        const LameZeroCgo lz(sl, frame);
        double r3 = 0.0;
        for (int p = 0; p < points; ++p) {
            const double r = 0.01 + 0.99 * U(rng);
            const double phi = -kPi + 0.05 + (2.0 * kPi - 0.1) * U(rng);
            const Vec2 x = frame.to_global(r * Vec2(std::cos(phi), std::sin(phi)));
            const auto H = lz.hessian(x);
            const double scale = (lame.lambda + 2.0 * lame.mu) * std::max(H[0].norm(), H[1].norm());
            r3 = std::max(r3, lame_operator(lz, x, lame).norm() / scale);
        }
        res_lz = std::max(res_lz, r3);
        t.rows.push_back({double(k), 2.0, r3});
    }
    const double tol = th.get("cgo.residual_rel");
    out.checks.push_back(make_check("elastic CGO residual (Lame + omega^2)", res_el, "<", tol));
    out.checks.push_back(make_check("harmonic CGO Laplacian residual", res_h, "<", tol));
    out.checks.push_back(make_check("Lame-zero CGO residual", res_lz, "<", tol));
    out.checks.push_back(make_check("xi . eta (relative)", xi_eta, "<", th.get("cgo.xi_eta_abs")));
    out.checks.push_back(make_check("|eta| - sqrt(2 + ks^2/tau^2)", eta_dev, "<", th.get("cgo.xi_eta_abs")));
    out.checks.push_back(make_check("max |eta|", eta_max, "<=", std::sqrt(3.0) + th.get("cgo.eta_bound_slack")));
    out.results = {{"draws", draws}, {"points", points}, {"max_residual_elastic", res_el},
                   {"max_residual_harmonic", res_h}, {"max_residual_lame_zero", res_lz}, {"max_xi_eta", xi_eta},
                   {"max_eta", eta_max}};
    out.tables.push_back(std::move(t));
    return out;
}

// ---------------------------------------------------------------- lemma_suite

// int_{t0}^{t1} int_0^inf f(r, phi) r dr dphi with r = rho^2, which removes the
// sqrt(r) kink of the CGO integrands at the apex.
Complex sector_in_rho(const std::function<Complex(double, double)>& f, double t0, double t1) {
    auto outer = [&](double phi) {
        auto g = [&](double rho) { return 2.0 * rho * rho * rho * f(rho * rho, phi); };
        return integrate(g, 0.0, std::numeric_limits<double>::infinity(), 1e-12, 1e-300).value;
    };
    return integrate(outer, t0, t1, 1e-11, 1e-300).value;
}

ExperimentOutput run_lemma_suite(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    ExperimentOutput out;
    Table te{"edge_integral", {"s", "h", "theta", "exact_re", "exact_im", "rel_error"}, {}};
    double e_max = 0.0;
    for (double s : n.numbers_or("edge_s", {4, 16, 64}))
        for (double h : n.numbers_or("edge_h", {0.25, 1.0}))
            for (double theta : n.numbers_or("edge_theta", {0.0, kPi / 4, kPi / 2})) {
                const Complex m = std::exp(kI * (theta / 2.0));
                const Complex ex = edge_integral_exact(s, h, theta);
                std::vector<double> pts{0.0};
                for (int k = 30; k >= 1; --k) pts.push_back(h * std::ldexp(1.0, -k));
                pts.push_back(h);
                const Complex q =
                    integrate_pieces([&](double r) { return std::exp(-s * std::sqrt(r) * m); }, pts, 1e-13, 1e-300).value;
                const double rel = std::abs(q - ex) / std::abs(ex);
                e_max = std::max(e_max, rel);
                te.rows.push_back({s, h, theta, ex.real(), ex.imag(), rel});
            }
    out.checks.push_back(make_check("edge_integral_exact vs quadrature", e_max, "<", th.get("lemma.edge_integral_rel")));
    {
        const double s = 1e4, h = 1.0, theta = kPi / 3;
        const Complex m = std::exp(kI * (theta / 2.0));
        const double dev = std::abs(s * s * edge_integral_exact(s, h, theta) - 2.0 / (m * m));
        out.checks.push_back(
            supplementary(make_check("s^2 * edge integral - 2 mu^-2 at s = 1e4", dev, "<", th.get("lemma.edge_integral_rel"))));
    }

    spdlog::debug("lemma suite: edge integrals done");
    Table tg{"gamma_tail", {"alpha", "zeta_re", "zeta_im", "h", "head_deviation", "tail", "bound"}, {}};
    double g_ratio = 0.0;
    const std::vector<Complex> zetas = {10.0, Complex(10.0, 5.0), 40.0, Complex(40.0, -10.0)};
    std::vector<std::pair<double, Complex>> grid;
    for (double a : n.numbers_or("gamma_alpha", {0.5, 1.0, 2.0}))
        for (Complex z : zetas) grid.emplace_back(a, z);
    grid.emplace_back(0.0, 20.0);
    grid.emplace_back(0.0, 40.0);
    const double hg = n.number_or("gamma_h", 1.0);
    for (const auto& [a, z] : grid) {
        const GammaTail g = gamma_tail(a, hg, z);
        auto f = [&, a = a, z = z](double r) { return std::pow(r, a) * std::exp(-z * r); };
        std::vector<double> pts{0.0, 1e-6 * hg, 1e-3 * hg, 0.1 * hg, hg};
        const Complex head = integrate_pieces(f, pts, 1e-13, 1e-300).value;
        const Complex tail = integrate(f, hg, std::numeric_limits<double>::infinity(), 1e-12, 1e-300).value;
        const double dev = std::abs(head - g.leading);
        g_ratio = std::max({g_ratio, dev / g.tail_bound, std::abs(tail) / g.tail_bound});
        tg.rows.push_back({a, z.real(), z.imag(), hg, dev, std::abs(tail), g.tail_bound});
    }
    out.checks.push_back(make_check("gamma_tail: max(|head - leading|, |tail|) / bound", g_ratio, "<=", 1.0));

    spdlog::debug("lemma suite: gamma tails done");
    Table ts{"sector_integrals", {"family", "theta_min", "theta_max", "s", "exact_re", "exact_im", "rel_error"}, {}};
    double s_max = 0.0;
    const std::vector<std::pair<double, double>> sectors = {{0.0, kPi / 2}, {-kPi / 3, kPi / 4}, {kPi / 6, 5 * kPi / 6}};
    for (const auto& [t0, t1] : sectors)
        for (double s : n.numbers_or("sector_s", {4.0, 16.0})) {
            for (int fam = 0; fam < 2; ++fam) {
                const int power = fam == 0 ? 2 : 4;
                auto f = [&, s = s](double r, double phi) {
                    const Complex m = std::exp(kI * (phi / 2.0));
                    return fam == 0 ? std::exp(-std::sqrt(s * r) * m) : std::exp(-s * std::sqrt(r) * m);
                };
                const Complex q = sector_in_rho(f, t0, t1);
                const Complex ex = sector_integral_exact(t0, t1, s, power);
                const double rel = std::abs(q - ex) / std::abs(ex);
                s_max = std::max(s_max, rel);
                ts.rows.push_back({double(fam), t0, t1, s, ex.real(), ex.imag(), rel});
            }
        }
    out.checks.push_back(make_check("sector integrals vs 6i(e^{-2i tmax} - e^{-2i tmin}) s^-p", s_max, "<",
                                    th.get("lemma.sector_rel")));
    {
        const double x = sector_integral_exact(0.0, kPi / 2, 16.0, 2).imag() + 12.0 / 256.0;
        out.checks.push_back(supplementary(make_check("sector example (0, pi/2), s = 16 equals -12i/256", std::abs(x), "<", 1e-15)));
    }

    spdlog::debug("lemma suite: sector integrals done");
    double w_ratio = 0.0;
    Table tw{"weighted_decay", {"alpha", "s", "integral", "bound"}, {}};
    for (double a : {0.5, 1.0, 2.0})
        for (double s : {4.0, 64.0}) {
            const double t0 = 0.0, t1 = kPi / 2;
            const double delta = std::min(std::cos(t0 / 2), std::cos(t1 / 2));
            auto f = [&](double r, double phi) { return Complex(std::exp(-std::sqrt(s * r) * std::cos(phi / 2)) * std::pow(r, a)); };
            const double q = sector_in_rho(f, t0, t1).real();
            const double bound = 2.0 * (t1 - t0) * boost::math::tgamma(2 * a + 4) * std::pow(delta, -(2 * a + 4)) *
                                 std::pow(s, -a - 2);
            w_ratio = std::max(w_ratio, q / bound);
            tw.rows.push_back({a, s, q, bound});
        }
    out.checks.push_back(supplementary(make_check("weighted decay integral / bound", w_ratio, "<=", 1.0)));

    out.results = {{"edge_integral_max_rel", e_max}, {"gamma_tail_max_ratio", g_ratio}, {"sector_max_rel", s_max}};
    out.tables = {te, tg, ts, tw};
    return out;
}

// ---------------------------------------------------------------- forward / convergence

ExperimentOutput run_forward(const ConfigNode& n, const Thresholds&, const RunContext&) {
    ExperimentOutput out;
    const LayeredDomain d = parse_domain(n);
    const double h = n.at("h").positive();
    const int ns = n.integer_or("n_samples", 201);
    std::optional<Fault> fault;
    JumpData jd;
    if (n.has("fault")) {
        fault = parse_fault(n.at("fault"));
        validate_fault(*fault, d);
        jd = (n.has("jumps") ? parse_jump_model(n.at("jumps")) : JumpModel{}).jump_data(*fault);
    }
    const auto r = solve_forward(d, fault ? &*fault : nullptr,
                                 fault ? FaultJumpFunctions::from(jd) : FaultJumpFunctions::zero(), h);
    const auto m = measure(*r.field, d, ns);
    double umax = 0.0;
    Table t{"measurement", {"s", "u1_re", "u1_im", "u2_re", "u2_im"}, {}};
    for (std::size_t i = 0; i < m.s.size(); ++i) {
        umax = std::max(umax, m.u[i].norm());
        t.rows.push_back({m.s[i], m.u[i](0).real(), m.u[i](0).imag(), m.u[i](1).real(), m.u[i](1).imag()});
    }
    double fmax = 0.0;
    if (fault) {
        for (const auto& p : jd.f)
            for (const auto& c : p.c) fmax = std::max(fmax, c.norm());
        for (const auto& p : jd.g)
            for (const auto& c : p.c) fmax = std::max(fmax, c.norm());
    }
    if (fmax == 0.0) out.checks.push_back(make_check("zero data gives zero measurement", umax, "<", 1e-12));
    out.results = {{"nodes", r.mesh->node_count()},
                   {"triangles", r.mesh->tri_count()},
                   {"max_abs_u_on_arc", umax},
                   {"solver_residual", r.stats.residual},
                   {"nearest_eigen_gap", r.stats.nearest_eigen_gap},
                   {"warnings", r.stats.warnings}};
    out.tables.push_back(std::move(t));
    return out;
}

ExperimentOutput run_convergence(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    ExperimentOutput out;
    const LayeredDomain d = parse_domain(n);
    if (d.layers.size() != 1) n.at("layers").fail("the manufactured problem uses a single layer");
    const LameParameters lp = d.layers[0];
    const Fault f = parse_fault(n.at("fault"));
    validate_fault(f, d);
    if (!f.closed) n.at("fault").fail("the manufactured problem needs a closed fault");
    const auto v = parse_cgo(n.at("inside"), d.omega, lp);
    const auto w = parse_cgo(n.at("outside"), d.omega, lp);
    const double h0 = n.at("h0").positive();
    const int levels = n.integer_or("levels", 4);
    if (levels < 2) n.at("levels").fail("need at least two levels");

    FaultJumpFunctions J;
    J.f = [&](int k, double s) {
        const Vec2 x = f.seg_a(k) + s * f.seg_tangent(k);
        return CVec2(w->value(x) - v->value(x));
    };
    J.g = [&](int k, double s) {
        const Vec2 x = f.seg_a(k) + s * f.seg_tangent(k);
        const Vec2 nu = f.normal(k);
        return CVec2(w->traction(x, nu, lp) - v->traction(x, nu, lp));
    };
    ForwardOptions o;
    o.bc.dirichlet = [&](const Vec2& x) { return w->value(x); };
    o.bc.traction = [&](const Vec2& x, const Vec2& nu) { return w->traction(x, nu, lp); };

    Table t{"convergence", {"level", "h", "nodes", "l2_error", "pair_order", "jump_error"}, {}};
    auto mesh = std::make_shared<const Mesh>(generate_mesh(d, &f, h0));
    std::vector<double> lh, le;
    double jump_max = 0.0, prev = 0.0;
    for (int l = 0; l < levels; ++l) {
        const auto r = solve_on_mesh(mesh, d, J, o);
        const Mesh& m = *mesh;
        auto exact = [&](const Vec2& x, int tri) {
            const auto& k = m.tris[tri];
            const Vec2 c = (m.nodes[k[0]] + m.nodes[k[1]] + m.nodes[k[2]]) / 3.0;
            return f.encloses(c) ? v->value(x) : w->value(x);
        };
        const double e = l2_error(*r.field, exact);
        const double je = max_jump_error(*r.field, J);
        jump_max = std::max(jump_max, je);
        const double h = h0 * std::ldexp(1.0, -l);
        lh.push_back(std::log(h));
        le.push_back(std::log(e));
        t.rows.push_back({double(l), h, double(m.node_count()), e, l ? std::log2(prev / e) : 0.0, je});
        prev = e;
        if (l + 1 < levels) mesh = std::make_shared<const Mesh>(refine(*mesh));
    }
    const double order = lsq_slope(lh, le);
    out.checks.push_back(make_check("observed L2 order (least squares over levels)", order, ">=", th.get("convergence.min_order")));
    out.checks.push_back(make_check("nodal displacement jump error", jump_max, "<", th.get("convergence.jump_abs")));
    out.results = {{"observed_order", order}, {"max_jump_error", jump_max}};
    out.tables.push_back(std::move(t));
    return out;
}

// ---------------------------------------------------------------- corner probe

ExperimentOutput run_corner_closure(const ConfigNode& n, const Thresholds& th) {
    ExperimentOutput out;
    const double qtol = th.get("closure.quadrature_rel");
    const double factor = th.get("closure.factor");
    Table t{"identity_closure", {"theta", "tau", "lhs_re", "lhs_im", "residual", "scale", "relative"}, {}};
    double worst = 0.0;
    for (double theta : n.at("thetas").numbers()) {
        const CornerSetup c = parse_corner(n, theta);
        const SumField D = parse_field_sum(n.at("field"), c.omega, c.lame);
        const auto P = edge_data_from_field(D, c, true), M = edge_data_from_field(D, c, false);
        for (double tau : n.at("taus").numbers()) {
            const auto prm = ElasticCgoParams::make(tau, default_direction(0.0, c.theta), Vec2::Zero(), c.omega, c.lame);
            const IdentityTerms I = probe_identity(c, P, M, prm, &D, qtol);
            const double rel = std::abs(I.residual()) / I.scale();
            worst = std::max(worst, rel);
            t.rows.push_back({theta, tau, I.lhs.real(), I.lhs.imag(), std::abs(I.residual()), I.scale(), rel});
        }
    }
    out.checks.push_back(make_check("identity residual / largest term", worst, "<=", factor * qtol));
    out.results = {{"max_relative_residual", worst}, {"quadrature_rel_tol", qtol}};
    out.tables.push_back(std::move(t));
    return out;
}

CVec2 cv(const Vec2& v) { return v.cast<Complex>(); }

ExperimentOutput run_corner_recovery(const ConfigNode& n, const Thresholds& th) {
    ExperimentOutput out;
    const CornerSetup c = parse_corner(n, n.at("theta").number());
    const auto taus = n.numbers_or("taus_scaled", {20, 40, 80, 160});
    Table t{"corner_recovery", {"case", "estimate_1", "estimate_2", "error_estimate", "inconclusive"}, {}};

    // unequal corner values, extensions with r^{3/2} terms
    const Vec2 fp = n.at("f_plus").vec2(), fm = n.at("f_minus").vec2();
    const auto ju = recover_displacement_jump(
        c, EdgeData::expansion(cv(fp), CVec2(0.5, -1.0), CVec2(0.2, 0.1), 1.5, CVec2(0.3, 0.1)),
        EdgeData::expansion(cv(fm), CVec2(-0.4, 0.3), CVec2(-0.3, 0.2), 2.0, CVec2(-0.2, 0.4)), taus);
    const double err_u = (ju.delta_f - cv(fp - fm)).norm();
    out.checks.push_back(make_check("unequal: |df_est - df_true|", err_u, "<", th.get("recovery.jump_abs")));
    t.rows.push_back({0, ju.delta_f(0).real(), ju.delta_f(1).real(), ju.error_estimate, double(ju.inconclusive)});

    const Vec2 fe = n.at("f_equal").vec2();
    const auto je = recover_displacement_jump(
        c, EdgeData::expansion(cv(fe), CVec2(0.5, -1.0), CVec2(0.2, 0.1), 1.5, CVec2(0.0, 0.0)),
        EdgeData::expansion(cv(fe), CVec2(-0.4, 0.3), CVec2(-0.3, 0.2), 2.0, CVec2(1.0, 0.0)), taus);
    out.checks.push_back(make_check("equal: |df_est|", je.delta_f.norm(), "<", th.get("recovery.equal_abs")));
    t.rows.push_back({1, je.delta_f(0).real(), je.delta_f(1).real(), je.error_estimate, double(je.inconclusive)});

    const Vec2 gm = n.at("g_minus").vec2();
    const Vec2 f0 = n.at("f_shared").vec2();
    const double gap = n.number_or("gap", 0.5);
    const Vec2 gdir = n.has("gap_direction") ? n.at("gap_direction").vec2().normalized() : Vec2(1.0, 0.0);
    auto rotation_case = [&](const Mat2& M, double gap_size, const std::string& name, double code) {
        const Vec2 gp = M * gm + gap_size * gdir;
        const auto rr = recover_traction_rotation(c, EdgeData::constant(cv(f0), cv(gp)), EdgeData::constant(cv(f0), cv(gm)), taus);
        if (rr.refused) throw NumericalError(name + ": " + rr.diagnostic);
        t.rows.push_back({code, rr.limit(0).real(), rr.limit(1).real(), rr.error_estimate, double(rr.inconclusive)});
        return rr.residual;
    };
    const Mat2 Th = theta_matrix(c.theta), Q = identity_rotation(c.theta);
    out.checks.push_back(make_check("g+ = Theta g-: rotation residual", rotation_case(Th, 0.0, "theta", 2), "<",
                                    th.get("recovery.rotation_holds"),
                                    "the identity only constrains g+ - Q g-, Q = -R(theta); Theta is a reflection"));
    out.checks.push_back(make_check("g+ = Theta g- + gap: rotation residual", rotation_case(Th, gap, "theta gap", 3), ">",
                                    th.get("recovery.rotation_violated")));
    out.checks.push_back(supplementary(make_check("g+ = Q g-: rotation residual", rotation_case(Q, 0.0, "Q", 4), "<",
                                                  th.get("recovery.rotation_holds"))));
    out.checks.push_back(supplementary(make_check("g+ = Q g- + gap: rotation residual", rotation_case(Q, gap, "Q gap", 5),
                                                  ">", th.get("recovery.rotation_violated"))));
    out.results = {{"unequal_estimate", vjson(Vec2(ju.delta_f(0).real(), ju.delta_f(1).real()))},
                   {"unequal_error_estimate", ju.error_estimate},
                   {"equal_estimate", vjson(Vec2(je.delta_f(0).real(), je.delta_f(1).real()))},
                   {"case_codes", "0 unequal, 1 equal, 2 Theta, 3 Theta+gap, 4 Q, 5 Q+gap"}};
    out.tables.push_back(std::move(t));
    return out;
}

ExperimentOutput run_corner_decay(const ConfigNode& n, const Thresholds& th) {
    ExperimentOutput out;
    const double tol = th.get("decay.exponent_tol");
    const double alpha = n.number_or("alpha", 0.5);
    const auto taus_scaled = n.numbers_or("taus_scaled", {20, 40, 80, 160});
    Table t{"decay_audit", {"theta", "tau", "abs_R6", "abs_R9"}, {}};
    double worst6 = 0.0, worst9 = 0.0;
    json per = json::array();
    for (double theta : n.at("thetas").numbers()) {
        const CornerSetup c = parse_corner(n, theta);
        const auto P = EdgeData::expansion(CVec2(1, 0.5), CVec2(0, 0), CVec2(0.7, -0.3), 1.0 + alpha, CVec2(0.2, 0.1));
        const auto M = EdgeData::constant(CVec2(1, 0.5), CVec2(0.1, 0.0));
        const SumField D = parse_field_sum(n.at("field"), c.omega, c.lame);
        const auto DP = edge_data_from_field(D, c, true), DM = edge_data_from_field(D, c, false);
        std::vector<double> ts, r6, r9;
        for (double s : taus_scaled) {
            const double tau = s / c.h;
            const auto prm = ElasticCgoParams::make(tau, default_direction(0.0, c.theta), Vec2::Zero(), c.omega, c.lame);
            ts.push_back(tau);
            r6.push_back(std::abs(probe_identity(c, P, M, prm).R.at(6)));
            r9.push_back(std::abs(probe_identity(c, DP, DM, prm, &D).R.at(9)));
            t.rows.push_back({theta, tau, r6.back(), r9.back()});
        }
        const double e6 = fit_power_rate(ts, r6);
        // |R9| ~ exp(-tau h cos(theta / 2)) for the default direction
        const double e9 = fit_exponential_rate(ts, r9) / (c.h * std::cos(theta / 2.0));
        worst6 = std::max(worst6, std::abs(e6 - (1.0 + alpha)));
        worst9 = std::max(worst9, std::abs(e9 - 1.0));
        per.push_back({{"theta", theta}, {"R6_power", e6}, {"R6_expected", 1.0 + alpha}, {"R9_rate_normalized", e9}});
    }
    out.checks.push_back(make_check("R6 power-law exponent vs 1 + alpha", worst6, "<", tol));
    out.checks.push_back(make_check("R9 exponential rate / (h cos(theta/2)) vs 1", worst9, "<", tol));
    out.results = {{"per_theta", per}};
    out.tables.push_back(std::move(t));
    return out;
}

ExperimentOutput run_corner_probe(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    const std::string mode = n.at("mode").string();
    if (mode == "closure") return run_corner_closure(n, th);
    if (mode == "recovery") return run_corner_recovery(n, th);
    if (mode == "decay") return run_corner_decay(n, th);
    n.at("mode").fail("unknown corner_probe mode \"" + mode + "\" (closure, recovery, decay)");
}

// ---------------------------------------------------------------- interface probe

ExperimentOutput run_interface_probe(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    ExperimentOutput out;
    const ConfigNode Bn = n.at("B");
    CMat2 B;
    for (int i = 0; i < 2; ++i) {
        const Vec2 row = Bn.at(i).vec2();
        B(i, 0) = row.x();
        B(i, 1) = row.y();
    }
    const Vec2 a = n.has("a") ? n.at("a").vec2() : Vec2::Zero();
    const LinearField u(cv(a), B);
    CornerSetup c;
    c.theta = n.at("theta").number();
    c.h = n.at("h").positive();
    c.omega = n.number_or("omega", 0.0);
    const Vec2 xc = n.at("xc").vec2();
    const double dir_min = n.number_or("dir_min", 0.0);
    const auto sweep = n.numbers_or("s_sweep", {16, 64, 256, 1024});
    Table t{"interface_probe", {"case", "s", "t_eff_re", "t_eff_im", "volume_term"}, {}};
    const auto cases = n.at("cases");
    json res = json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto cn = cases.at(i);
        const LameParameters l1 = parse_lame(cn.at("inside")), l2 = parse_lame(cn.at("outside"));
        const auto rep = interface_corner_probe(u, l1, l2, xc, dir_min, c, sweep);
        for (std::size_t k = 0; k < rep.s.size(); ++k)
            t.rows.push_back({double(i), rep.s[k], rep.t_eff[k].real(), rep.t_eff[k].imag(), rep.volume_term[k]});
        const Complex est(rep.t_estimate.x(), rep.t_estimate.y());
        const std::string name = cn.at("name").string();
        if (l1 == l2) {
            out.checks.push_back(make_check(name + ": |t_est| with identical parameters", std::abs(est), "<",
                                            th.get("interface.identical_abs")));
        } else {
            out.checks.push_back(make_check(name + ": |t_est - t_analytic|", std::abs(est - rep.t_reference), "<",
                                            th.get("interface.distinct_abs")));
        }
        res.push_back({{"name", name},
                       {"t_estimate", cjson(est)},
                       {"t_reference", cjson(rep.t_reference)},
                       {"error_estimate", rep.extrapolated.error_estimate},
                       {"volume_decay_power", rep.volume_decay_rate}});
    }
    out.results = {{"cases", res}};
    out.tables.push_back(std::move(t));
    return out;
}

// ---------------------------------------------------------------- dimred

ExperimentOutput run_dimred_suite(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    ExperimentOutput out;
    const LameParameters lame = parse_lame(n.at("lame"));
    const double omega = n.number_or("omega", 1.0);
    const double M = n.at("slab_M").positive();
    const double edge_len = n.at("edge_length").positive();
    const double xc3 = n.number_or("center", 0.0);
    const int nq = n.integer_or("quadrature_points", 128);
    const CutoffProfile phi = CutoffProfile::for_slab(xc3, M, edge_len, 4);

    const double m1 = std::abs(phi.moment_d1()), m2 = std::abs(phi.moment_d2());
    out.checks.push_back(make_check("moment int phi'", m1, "<=", th.get("dimred.moment_abs")));
    out.checks.push_back(make_check("moment int phi''", m2, "<=", th.get("dimred.moment_abs")));

    // manufactured 3D solutions
    const Vec2 xp = n.at("point").vec2();
    std::vector<std::pair<std::string, std::shared_ptr<const Field3D>>> fields;
    const auto kz = n.numbers_or("kz", {1.0, 3.0});
    for (double k : kz) {
        fields.emplace_back("shear kz=" + std::to_string(k),
                            std::make_shared<PlaneWave3D>(PlaneWave3D::shear(k, Vec2(1.0, 0.3), omega, lame)));
        fields.emplace_back("pressure kz=" + std::to_string(k),
                            std::make_shared<PlaneWave3D>(PlaneWave3D::pressure(k, Vec2(-0.2, 1.0), omega, lame, 0.5)));
    }
    {
        auto sum = std::make_shared<SumField3D>();
        for (const auto& [name, f] : fields) sum->add(f, Complex(0.7, -0.2));
        fields.emplace_back("sum of plane waves", sum);
    }
    {
        // extruded: 2D elastic CGO in-plane, x3-independent scalar wave for u3
        const auto in = std::make_shared<ElasticCgo>(ElasticCgoParams::make(2.0, Vec2(0.6, 0.8), Vec2::Zero(), omega, lame));
        const double ks = omega / std::sqrt(lame.mu);
        const Vec2 e(std::cos(0.4), std::sin(0.4));
        auto u3 = [=](const Vec2& x) { return std::exp(kI * ks * e.dot(x)); };
        auto g3 = [=](const Vec2& x) { return CVec2(kI * ks * e.cast<Complex>() * std::exp(kI * ks * e.dot(x))); };
        auto h3 = [=](const Vec2& x) {
            return CMat2(-ks * ks * (e * e.transpose()).cast<Complex>() * std::exp(kI * ks * e.dot(x)));
        };
        fields.emplace_back("extruded CGO", std::make_shared<ExtrudedField>(in, u3, g3, h3));
    }
    Table tr{"reduced_residuals", {"field", "res_12_rel", "res_3_rel", "swapped_res_12_rel", "swapped_res_3_rel"}, {}};
    double worst = 0.0, swapped_min = 1e300;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const ReducedResidual r = reduced_residual(*fields[i].second, xp, phi, lame, omega, nq);
        const double s = std::max(r.scale, 1e-300);
        const double a1 = r.res_12.norm() / s, a3 = std::abs(r.res_3) / s;
        const double b1 = r.swapped_res_12.norm() / s, b3 = std::abs(r.swapped_res_3) / s;
        worst = std::max({worst, a1, a3});
        swapped_min = std::min(swapped_min, std::max(b1, b3));
        tr.rows.push_back({double(i), a1, a3, b1, b3});
    }
    out.checks.push_back(make_check("reduced-system residuals (relative)", worst, "<", th.get("dimred.residual_rel")));
    out.checks.push_back(supplementary(make_check("same residuals with lambda and mu exchanged (smallest)", swapped_min, ">",
                                                  th.get("dimred.residual_rel"),
                                                  "the exchanged splitting does not hold for generic fields")));
    // d_i P(u) = P(d_i u) on a plane wave: P(grad) vs k_i P(u)
    {
        const double k = kz.front();
        const PlaneWave3D pw = PlaneWave3D::shear(k, Vec2(1.0, 0.3), omega, lame);
        const CVec3 Pu = dimension_reduce(pw, xp, phi, nq);
        const Complex beta = std::sqrt(Complex(k * k - omega * omega / lame.mu));
        const Vec2 e = Vec2(1.0, 0.3).normalized();
        double worst_c = 0.0;
        for (int i = 0; i < 2; ++i) {
            const CVec3 Pd = [&] {
                const GaussRule g = gauss_legendre(nq, phi.center - phi.half_width, phi.center + phi.half_width);
                CVec3 acc = CVec3::Zero();
                for (int q = 0; q < nq; ++q)
                    acc += g.w[q] * phi.value(g.x[q]) * pw.gradient(Vec3(xp.x(), xp.y(), g.x[q])).col(i);
                return acc;
            }();
            worst_c = std::max(worst_c, (Pd - beta * e(i) * Pu).norm() / Pd.norm());
        }
        out.checks.push_back(make_check("d_i P(u) = P(d_i u)", worst_c, "<", th.get("dimred.commute_rel")));
    }

    // third component
    CornerSetup c;
    c.theta = n.at("theta").number();
    c.h = n.at("h").positive();
    c.lame = lame;
    c.omega = omega;
    const double g3 = n.number_or("planted_g3", 0.7);
    const double gtol = th.get("dimred.g3_abs");
    Table t3{"third_component", {"case", "delta_Pf3", "Pg3_plus", "Pg3_minus", "g3_error_estimate"}, {}};
    auto third = [&](double f3p, double f3m, double g3p, double g3m, double mass) {
        const auto p = ScalarEdgeData::expansion(f3p, 0.0, 0.3, 2.0, g3p, 0.2, 1.0);
        const auto m = ScalarEdgeData::expansion(f3m, 0.0, -0.1, 2.0, g3m, 0.1, 1.0);
        return recover_third_component(c, p, m, mass);
    };
    {
        const auto r = third(0.3, 0.3, g3, 0.0, 1.0);
        if (!r.stage_b) throw NumericalError("third-component traction stage refused: " + r.diagnostic);
        out.checks.push_back(make_check("planted g3 = " + std::to_string(g3) + " recovered (plus edge)",
                                        std::abs(r.Pg3_plus - g3), "<", gtol));
        out.checks.push_back(make_check("planted g3 = 0 recovered (minus edge)", std::abs(r.Pg3_minus), "<", gtol));
        t3.rows.push_back({0, std::abs(r.delta_Pf3), r.Pg3_plus.real(), r.Pg3_minus.real(), r.g3_error});
    }
    {
        const auto r = third(0.3, 0.3, 0.0, 0.0, 1.0);
        if (!r.stage_b) throw NumericalError("third-component traction stage refused: " + r.diagnostic);
        out.checks.push_back(make_check("planted zero g3: |estimate|",
                                        std::max(std::abs(r.Pg3_plus), std::abs(r.Pg3_minus)), "<", gtol));
        t3.rows.push_back({1, std::abs(r.delta_Pf3), r.Pg3_plus.real(), r.Pg3_minus.real(), r.g3_error});
    }
    {
        const auto r = third(g3, 0.0, 0.1, 0.1, 1.0);
        out.checks.push_back(make_check("planted f3 jump recovered", std::abs(r.delta_Pf3 - g3), "<", gtol));
        t3.rows.push_back({2, std::abs(r.delta_Pf3), 0.0, 0.0, r.delta_Pf3_error});
    }

    // phi scaled by 3 and a second admissible bump
    auto full = [&](const CutoffProfile& prof) {
        EdgeData3 p{EdgeData::expansion(CVec2(1, 0), CVec2(0.5, -1), CVec2(0.2, 0.1), 1.5, CVec2(0.3, 0.1)),
                    ScalarEdgeData::expansion(g3, 0.0, 0.3, 2.0, 0.1, 0.2, 1.0)};
        EdgeData3 m{EdgeData::expansion(CVec2(0, 0), CVec2(-0.4, 0.3), CVec2(-0.3, 0.2), 2.0, CVec2(-0.2, 0.4)),
                    ScalarEdgeData::expansion(0.0, 0.0, -0.1, 2.0, 0.1, 0.1, 1.0)};
        return recover_jump_3d(c, p, m, prof);
    };
    CutoffProfile phi3 = phi;
    phi3.amplitude *= 3.0;
    CutoffProfile other = CutoffProfile::normalized(xc3 + 0.1 * phi.half_width, 0.7 * phi.half_width, 6);
    other.check_inside_slab(M);
    const Recovery3D r1 = full(phi), r3 = full(phi3), r2 = full(other);
    const double scale_pf = std::max((r3.delta_Pf12 - 3.0 * r1.delta_Pf12).norm(), std::abs(r3.delta_Pf3 - 3.0 * r1.delta_Pf3)) /
                            std::max(r1.delta_Pf12.norm(), 1e-300);
    const double inv = std::max((r3.delta_f12 - r1.delta_f12).norm(), std::abs(r3.delta_f3 - r1.delta_f3));
    const double agree = std::max((r2.delta_f12 - r1.delta_f12).norm(), std::abs(r2.delta_f3 - r1.delta_f3));
    out.checks.push_back(make_check("phi x 3: P(df) scales by 3 (relative deviation)", scale_pf, "<", th.get("dimred.scale_invariance")));
    out.checks.push_back(make_check("phi x 3: normalized df invariant", inv, "<", th.get("dimred.scale_invariance")));
    out.checks.push_back(make_check("two admissible bumps agree", agree, "<", th.get("dimred.profile_agreement")));
    out.checks.push_back(supplementary(make_check("in-plane df recovered through the reduced system",
                                                  (r1.delta_f12 - CVec2(1, 0)).norm(), "<", gtol)));

    double zmin = 1e300;
    for (double theta = 0.05; theta < kPi; theta += 0.05)
        zmin = std::min(zmin, std::abs(std::pow(Z_function(theta), 2) / std::pow(Z_function(0.0), 2) + 1.0));
    out.checks.push_back(make_check("min |Z^2(theta)/Z^2(0) + 1| over (0, pi)", zmin, ">", 0.0));

    out.results = {{"profile", {{"center", phi.center}, {"half_width", phi.half_width}, {"amplitude", phi.amplitude}}},
                   {"moments", {m1, m2}},
                   {"max_reduced_residual", worst},
                   {"delta_f12", vjson(Vec2(r1.delta_f12(0).real(), r1.delta_f12(1).real()))},
                   {"delta_f3", r1.delta_f3.real()},
                   {"g3_plus", r1.g3_plus.real()},
                   {"g3_minus", r1.g3_minus.real()}};
    out.tables = {tr, t3};
    return out;
}

// ---------------------------------------------------------------- distinguishability / reconstruct

ExperimentConfig2D parse_config2d(const ConfigNode& n) {
    ExperimentConfig2D c;
    c.domain = parse_domain(n);
    c.fault = parse_fault(n.at("fault"));
    validate_fault(c.fault, c.domain);
    c.jumps = (n.has("jumps") ? parse_jump_model(n.at("jumps")) : JumpModel{}).jump_data(c.fault);
    return c;
}

ExperimentOutput run_distinguishability(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    ExperimentOutput out;
    const double h = n.at("h").positive();
    const int ns = n.integer_or("n_samples", 301);
    const auto cases = n.at("cases");
    Table t{"distinguishability", {"case", "misfit", "convergence_error", "floor"}, {}};
    json res = json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto cn = cases.at(i);
        const std::string name = cn.at("name").string();
        const auto a = parse_config2d(cn.at("a")), b = parse_config2d(cn.at("b"));
        const auto r = distinguishability_test(a, b, h, ns, th.get("distinguish.floor_factor"));
        t.rows.push_back({double(i), r.misfit, r.convergence_error, r.floor});
        if (!r.applicable) {
            out.checks.push_back(make_check(name + ": identical configurations (guard)", r.misfit, "<", 1e-12, r.note));
        } else {
            out.checks.push_back(make_check(name + ": misfit above calibrated floor", r.misfit, ">", r.floor));
            out.checks.push_back(make_check(name + ": misfit", r.misfit, ">", th.get("distinguish.min_misfit")));
        }
        res.push_back({{"name", name}, {"misfit", r.misfit}, {"convergence_error", r.convergence_error}, {"floor", r.floor}});
    }
    out.results = {{"h", h}, {"cases", res}};
    out.tables.push_back(std::move(t));
    return out;
}

ExperimentOutput run_reconstruct(const ConfigNode& n, const Thresholds& th, const RunContext& ctx) {
    ExperimentOutput out;
    const std::uint64_t seed = seed_of(n, ctx);
    const double h = n.at("h").positive();
    const int ns = n.integer_or("n_samples", 201);
    const int nseeds = n.integer_or("seeds", 5);
    const double noise = n.number_or("rel_noise", 0.1);
    const bool avoid_crime = n.boolean_or("avoid_inverse_crime", true);
    const double vtol = th.get("reconstruct.vertex_factor") * h;
    ReconstructOptions ro;
    ro.max_solves = static_cast<int>(th.get("reconstruct.max_solves"));
    ro.threads = 1;
    const auto cases = n.at("cases");
    Table runs{"reconstruct_runs", {"case", "seed", "initial_error", "final_error", "misfit", "solves", "converged"}, {}};
    Table trace{"misfit_trace", {"case", "seed", "iteration", "misfit", "gradient_norm", "solves"}, {}};
    json res = json::array();
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const auto cn = cases.at(ci);
        const std::string name = cn.at("name").string();
        const LayeredDomain d = parse_domain(cn);
        FaultParameterization fam;
        const std::string family = cn.at("family").string();
        if (family == "open") fam.family = FaultFamily::OpenPolyline;
        else if (family == "closed_convex") fam.family = FaultFamily::ClosedConvex;
        else cn.at("family").fail("family must be \"open\" or \"closed_convex\"");
        const Fault truth_fault = parse_fault(cn.at("truth"));
        if (truth_fault.closed != (fam.family == FaultFamily::ClosedConvex)) cn.at("truth").fail("truth does not match the family");
        fam.vertices = static_cast<int>(truth_fault.vertices.size());
        fam.jumps = parse_jump_model(cn.at("jumps"));
        fam.unknown_f = cn.boolean_or("unknown_f", false);
        const Eigen::VectorXd truth = fam.encode(truth_fault);
        try {
            fam.validate(truth, d);
        } catch (const ValidationError& e) {
            cn.at("truth").fail(e.what());
        }
        ForwardMapOptions fo;
        fo.h = h;
        fo.n_samples = ns;
        const ForwardMap proto(d, fam, fo);
        const BoundaryMeasurement data = synthesize(proto, truth, avoid_crime);

        // one task per seed; results collected in seed order
        auto task = [&, ci](int k) {
            const std::uint64_t s = seed + 1000 * ci + k;
            const Eigen::VectorXd init = perturbed_init(fam, d, truth, noise, s);
            ForwardMap map(d, fam, fo);
            return std::make_tuple(init, reconstruct(data, map, init, ro));
        };
        std::vector<std::future<std::tuple<Eigen::VectorXd, ReconstructResult>>> fut;
        for (int k = 0; k < nseeds; ++k)
            fut.push_back(std::async(ctx.threads > 1 ? std::launch::async : std::launch::deferred, task, k));
        int success = 0;
        json per = json::array();
        for (int k = 0; k < nseeds; ++k) {
            const auto [init, r] = fut[k].get();
            const double e0 = max_vertex_error(fam, init, truth), e1 = max_vertex_error(fam, r.best, truth);
            const bool ok = e1 < vtol && r.solves <= ro.max_solves;
            success += ok;
            runs.rows.push_back({double(ci), double(k), e0, e1, r.best_misfit, double(r.solves), double(r.converged)});
            for (const auto& it : r.history)
                trace.rows.push_back({double(ci), double(k), double(it.iteration), it.misfit, it.gradient_norm, double(it.solves)});
            json verts = json::array();
            for (int v = 0; v < fam.vertices; ++v) verts.push_back(vjson(r.best.segment<2>(2 * v)));
            per.push_back({{"seed_index", k}, {"initial_error", e0}, {"final_error", e1}, {"solves", r.solves},
                           {"stop_reason", r.stop_reason}, {"recovered_vertices", verts}});
        }
        out.checks.push_back(make_check(name + ": runs with vertex error < " + std::to_string(vtol), double(success), ">=",
                                        th.get("reconstruct.min_success")));
        json tv = json::array();
        for (const auto& v : truth_fault.vertices) tv.push_back(vjson(v));
        res.push_back({{"name", name}, {"truth", tv}, {"successes", success}, {"runs", per}});
    }
    out.results = {{"h", h}, {"vertex_tolerance", vtol}, {"avoid_inverse_crime", avoid_crime}, {"cases", res}};
    out.tables = {runs, trace};
    return out;
}

// ---------------------------------------------------------------- jump relations

ExperimentOutput run_jump_relations(const ConfigNode& n, const Thresholds& th, const RunContext&) {
    ExperimentOutput out;
    const std::string rel = n.string_or("relation", "rotation");
    RelationMatrix kind;
    if (rel == "rotation") kind = RelationMatrix::Rotation;
    else if (rel == "theta") kind = RelationMatrix::Theta;
    else n.at("relation").fail("relation must be \"rotation\" or \"theta\"");
    Fault poly = parse_fault(n.at("polygon"));
    if (!poly.closed) n.at("polygon").fail("polygon must be closed");
    const int m = poly.segment_count();
    const Vec2 df = n.at("f_difference").vec2();
    const Vec2 g0 = n.at("g_start").vec2();
    const double eps = n.number_or("epsilon", 1e-3);

    std::vector<Vec2> f2(m, Vec2(0.3, -0.2)), f1(m), g2(m, Vec2(-0.1, 0.4)), g1(m);
    const auto gd = generate_consistent_g(poly, g0, kind);
    for (int k = 0; k < m; ++k) {
        f1[k] = f2[k] + df;
        g1[k] = g2[k] + gd[k];
    }
    const auto rep = jump_relation_check(poly, f1, f2, g1, g2, kind);
    const double tol = th.get("relations.consistent_abs");
    out.checks.push_back(make_check("consistent data: f relation violation", rep.max_f_violation, "<=", tol));
    out.checks.push_back(make_check("consistent data: g relation violation", rep.max_g_violation, "<=", tol));
    const auto same = jump_relation_check(poly, f1, f1, g1, g1, kind);
    out.checks.push_back(make_check("identical data: violations", std::max(same.max_f_violation, same.max_g_violation), "<=", 0.0));

    Table t{"relation_sequence", {"segment", "g_diff_1", "g_diff_2"}, {}};
    for (int k = 0; k < m; ++k) t.rows.push_back({double(k), gd[k].x(), gd[k].y()});
    if (n.has("expected_sequence")) {
        const auto es = n.at("expected_sequence");
        double dev = 0.0;
        for (std::size_t k = 0; k < es.size() && static_cast<int>(k) < m; ++k) dev = std::max(dev, (es.at(k).vec2() - gd[k]).norm());
        out.checks.push_back(make_check("generated sequence matches expected", dev, "<=", tol));
    }

    // single-edge perturbations
    const double lo = th.get("relations.detect_low") * eps, hi = th.get("relations.detect_high") * eps;
    double fmin = 1e300, fmax = 0.0, gmin = 1e300, gmax = 0.0;
    for (int e = 0; e < m; ++e) {
        auto fp = f1;
        fp[e] += eps * Vec2(0.6, 0.8);
        auto gp = g1;
        gp[e] += eps * Vec2(-0.8, 0.6);
        const auto rf = jump_relation_check(poly, fp, f2, g1, g2, kind);
        const auto rg = jump_relation_check(poly, f1, f2, gp, g2, kind);
        fmin = std::min(fmin, rf.max_f_violation);
        fmax = std::max(fmax, rf.max_f_violation);
        gmin = std::min(gmin, rg.max_g_violation);
        gmax = std::max(gmax, rg.max_g_violation);
    }
    out.checks.push_back(make_check("perturbed f: smallest violation", fmin, ">=", lo));
    out.checks.push_back(make_check("perturbed f: largest violation", fmax, "<=", hi));
    out.checks.push_back(make_check("perturbed g: smallest violation", gmin, ">=", lo));
    out.checks.push_back(make_check("perturbed g: largest violation", gmax, "<=", hi));

    json fixed = json::array();
    if (n.has("fixed_space_polygons")) {
        const auto fp = n.at("fixed_space_polygons");
        for (std::size_t i = 0; i < fp.size(); ++i) {
            Fault q = parse_fault(fp.at(i));
            q.closed = true;
            const auto dummy = std::vector<Vec2>(q.segment_count(), Vec2::Zero());
            const auto rq = jump_relation_check(q, dummy, dummy, dummy, dummy, RelationMatrix::Rotation);
            const auto rt = jump_relation_check(q, dummy, dummy, dummy, dummy, RelationMatrix::Theta);
            fixed.push_back({{"vertices", q.segment_count()}, {"fixed_space_dim_rotation", rq.fixed_space_dim},
                             {"fixed_space_dim_theta", rt.fixed_space_dim}});
        }
    }
    out.results = {{"relation", rel},
                   {"max_f_violation", rep.max_f_violation},
                   {"max_g_violation", rep.max_g_violation},
                   {"fixed_space_dim", rep.fixed_space_dim},
                   {"fixed_spaces", fixed}};
    out.tables.push_back(std::move(t));
    return out;
}

using Runner = ExperimentOutput (*)(const ConfigNode&, const Thresholds&, const RunContext&);

const std::vector<std::pair<std::string, Runner>>& runners() {
    static const std::vector<std::pair<std::string, Runner>> r = {
        {"forward", run_forward},
        {"convergence", run_convergence},
        {"cgo_check", run_cgo_check},
        {"lemma_suite", run_lemma_suite},
        {"corner_probe", run_corner_probe},
        {"interface_probe", run_interface_probe},
        {"dimred_suite", run_dimred_suite},
        {"distinguishability", run_distinguishability},
        {"reconstruct", run_reconstruct},
        {"jump_relations", run_jump_relations},
    };
    return r;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> v;
        for (const auto& [name, f] : runners()) v.push_back(name);
        return v;
    }();
    return k;
}

ExperimentOutput run_experiment(const json& cfg, const RunContext& ctx) {
    const ConfigNode root(cfg, "");
    if (!cfg.is_object()) root.fail("configuration must be a JSON object");
    const std::string kind = root.at("kind").string();
    Thresholds th = ctx.thresholds;
    if (root.has("thresholds")) th.override_from(root.at("thresholds"));
    for (const auto& [name, f] : runners()) {
        if (name != kind) continue;
        spdlog::info("running {}", kind);
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentOutput out = f(root, th, ctx);
        out.kind = kind;
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }
    root.at("kind").fail("unknown experiment kind \"" + kind + "\"");
}

}  // namespace disloc
