#include "disloc/geometry.hpp"

#include "disloc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace disloc {

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << v.message;
        if (v.i >= 0) os << " (" << v.i << ", " << v.j << ")";
        os << "; ";
    }
    return os.str();
}

ValidationReport validate_lame(const LameParameters& p, int n) {
    ValidationReport r;
    if (!(p.mu > 0.0)) r.violations.push_back({"mu > 0 fails"});
    if (!(2.0 * p.mu + n * p.lambda > 0.0)) r.violations.push_back({"2*mu + n*lambda > 0 fails"});
    return r;
}

Mat2 theta_matrix(double theta) {
    if (!(theta > 0.0 && theta < kPi)) throw ValidationError("theta must lie in (0, pi)");
    Mat2 m;
    m << -std::cos(theta), -std::sin(theta), -std::sin(theta), std::cos(theta);
    return m;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double l2 = ab.squaredNorm();
    double t = l2 > 0 ? (p - a).dot(ab) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + t * ab - p).norm();
}

namespace {
double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); }
}  // namespace

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d, double tol) {
    if (tol > 0.0) {
        if (point_segment_distance(a, c, d) <= tol || point_segment_distance(b, c, d) <= tol ||
            point_segment_distance(c, a, b) <= tol || point_segment_distance(d, a, b) <= tol)
            return true;
    }
    const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    auto on = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
               std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
    };
    if (d1 == 0 && on(c, d, a)) return true;
    if (d2 == 0 && on(c, d, b)) return true;
    if (d3 == 0 && on(a, b, c)) return true;
    if (d4 == 0 && on(a, b, d)) return true;
    return false;
}

bool point_in_polygon(const Vec2& p, const Polyline& poly) {
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
            if (p.x() < x) in = !in;
        }
    }
    return in;
}

double signed_area(const Polyline& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross2(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * a;
}

// ---------------------------------------------------------------- domain

bool LayeredDomain::is_dirichlet_edge(int k) const {
    return std::find(dirichlet_edges.begin(), dirichlet_edges.end(), k) != dirichlet_edges.end();
}

double LayeredDomain::diameter() const {
    double d = 0.0;
    for (const auto& a : outer)
        for (const auto& b : outer) d = std::max(d, (a - b).norm());
    return d;
}

double LayeredDomain::area() const { return signed_area(outer); }

bool LayeredDomain::contains(const Vec2& x) const {
    return point_in_polygon(x, outer) && boundary_distance(x) > 1e-14 * diameter();
}

double LayeredDomain::boundary_distance(const Vec2& x) const {
    double d = 1e300;
    for (int k = 0; k < edge_count(); ++k) d = std::min(d, point_segment_distance(x, edge_a(k), edge_b(k)));
    return d;
}

double LayeredDomain::perimeter() const {
    double p = 0.0;
    for (int k = 0; k < edge_count(); ++k) p += (edge_b(k) - edge_a(k)).norm();
    return p;
}

double LayeredDomain::boundary_position(const Vec2& x) const {
    int best = 0;
    double bd = 1e300;
    for (int k = 0; k < edge_count(); ++k) {
        const double d = point_segment_distance(x, edge_a(k), edge_b(k));
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    double pos = 0.0;
    for (int k = 0; k < best; ++k) pos += (edge_b(k) - edge_a(k)).norm();
    pos += (x - edge_a(best)).norm();
    return pos;
}

Vec2 LayeredDomain::boundary_point(double pos) const {
    const double P = perimeter();
    pos = std::fmod(pos, P);
    if (pos < 0) pos += P;
    for (int k = 0; k < edge_count(); ++k) {
        const double l = (edge_b(k) - edge_a(k)).norm();
        if (pos <= l || k == edge_count() - 1) return edge_a(k) + std::min(pos / l, 1.0) * (edge_b(k) - edge_a(k));
        pos -= l;
    }
    return outer.front();
}

double LayeredDomain::measurement_start() const {
    if (measurement.edges.empty()) return 0.0;
    const int e = measurement.edges.front();
    double pos = 0.0;
    for (int k = 0; k < e; ++k) pos += (edge_b(k) - edge_a(k)).norm();
    return pos + measurement.t_start * (edge_b(e) - edge_a(e)).norm();
}

double LayeredDomain::measurement_length() const {
    if (measurement.edges.empty()) return 0.0;
    double len = 0.0;
    const std::size_t m = measurement.edges.size();
    for (std::size_t k = 0; k < m; ++k) {
        const int e = measurement.edges[k];
        const double l = (edge_b(e) - edge_a(e)).norm();
        const double t0 = k == 0 ? measurement.t_start : 0.0;
        const double t1 = k + 1 == m ? measurement.t_end : 1.0;
        len += (t1 - t0) * l;
    }
    return len;
}

Polyline LayeredDomain::interface_left_region(int k) const {
    const Polyline& g = interfaces.at(k);
    Polyline poly = g;
    const double P = perimeter();
    const double pa = boundary_position(g.front());
    const double pb = boundary_position(g.back());
    double span = pa - pb;
    if (span <= 0) span += P;
    std::vector<std::pair<double, Vec2>> walk;
    double pos = 0.0;
    for (int e = 0; e < edge_count(); ++e) {
        double rel = pos - pb;
        if (rel < 0) rel += P;
        if (rel > 1e-14 * P && rel < span - 1e-14 * P) walk.push_back({rel, outer[e]});
        pos += (edge_b(e) - edge_a(e)).norm();
    }
    std::sort(walk.begin(), walk.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& w : walk) poly.push_back(w.second);
    return poly;
}

int LayeredDomain::layer_of(const Vec2& x) const {
    int count = 0;
    for (int k = 0; k < static_cast<int>(interfaces.size()); ++k)
        if (point_in_polygon(x, interface_left_region(k))) ++count;
    return std::min(count, static_cast<int>(layers.size()) - 1);
}

namespace {

bool polyline_self_intersects(const Polyline& p, bool closed) {
    const int n = static_cast<int>(p.size());
    const int ns = closed ? n : n - 1;
    for (int a = 0; a < ns; ++a)
        for (int b = a + 1; b < ns; ++b) {
            const bool adjacent = (b == a + 1) || (closed && a == 0 && b == ns - 1);
            const Vec2 a0 = p[a], a1 = p[(a + 1) % n], b0 = p[b], b1 = p[(b + 1) % n];
            if (adjacent) {
                // adjacent segments may only share their common vertex
                const Vec2 far_b = (b == a + 1) ? b1 : b0;
                const Vec2 far_a = (b == a + 1) ? a0 : a1;
                if (point_segment_distance(far_b, a0, a1) < 1e-14 || point_segment_distance(far_a, b0, b1) < 1e-14)
                    return true;
                continue;
            }
            if (segments_intersect(a0, a1, b0, b1)) return true;
        }
    return false;
}

bool polylines_touch(const Polyline& a, const Polyline& b, bool& proper_cross) {
    proper_cross = false;
    bool touch = false;
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            if (!segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) continue;
            touch = true;
            const double d1 = orient(b[j], b[j + 1], a[i]), d2 = orient(b[j], b[j + 1], a[i + 1]);
            const double d3 = orient(a[i], a[i + 1], b[j]), d4 = orient(a[i], a[i + 1], b[j + 1]);
            if (d1 * d2 < 0 && d3 * d4 < 0) proper_cross = true;
        }
    return touch;
}

}  // namespace

ValidationReport validate_partition(const LayeredDomain& d) {
    ValidationReport r;
    auto add = [&](std::string m, int i = -1, int j = -1) { r.violations.push_back({std::move(m), i, j}); };
    const double diam = d.diameter();
    const double tol = 1e-9 * std::max(diam, 1e-300);

    if (d.outer.size() < 3) {
        add("outer boundary needs at least 3 vertices");
        return r;
    }
    if (d.area() <= 0.0) add("outer boundary must be counterclockwise");
    if (polyline_self_intersects(d.outer, true)) add("outer boundary is not simple");

    const int nI = static_cast<int>(d.interfaces.size());
    if (static_cast<int>(d.layers.size()) != nI + 1)
        add("layer count must equal interface count + 1", static_cast<int>(d.layers.size()), nI);
    for (int l = 0; l < static_cast<int>(d.layers.size()); ++l) {
        auto v = validate_lame(d.layers[l], 2);
        if (!v.ok()) add("layer parameters: " + v.violations.front().message, l, l);
    }
    for (int l = 0; l + 1 < static_cast<int>(d.layers.size()); ++l)
        if (d.layers[l] == d.layers[l + 1]) add("adjacent layers have identical parameters", l, l + 1);

    std::vector<bool> interface_ok(nI, true);
    for (int k = 0; k < nI; ++k) {
        const Polyline& g = d.interfaces[k];
        bool ok = true;
        if (g.size() < 2) ok = false;
        else {
            if (d.boundary_distance(g.front()) > tol || d.boundary_distance(g.back()) > tol) ok = false;
            for (std::size_t i = 1; i + 1 < g.size(); ++i)
                if (!d.contains(g[i]) || d.boundary_distance(g[i]) <= tol) ok = false;
            for (std::size_t i = 0; i + 1 < g.size() && ok; ++i) {
                const Vec2 mid = 0.5 * (g[i] + g[i + 1]);
                if (!d.contains(mid)) ok = false;
            }
            if (polyline_self_intersects(g, false)) ok = false;
        }
        if (!ok) {
            add("interface must be a simple polyline joining two boundary points through the interior", k, k);
            interface_ok[k] = false;
        }
    }

    std::vector<std::vector<bool>> touching(nI, std::vector<bool>(nI, false));
    for (int a = 0; a < nI; ++a)
        for (int b = a + 1; b < nI; ++b) {
            if (!interface_ok[a] || !interface_ok[b]) continue;
            bool cross = false;
            if (polylines_touch(d.interfaces[a], d.interfaces[b], cross)) {
                touching[a][b] = true;
                if (cross)
                    add("interfaces cross: layers not disjoint", a, b);
                else
                    add("layers separated by two interfaces share a boundary point", a, b + 1);
            }
        }
    for (int k = 0; k + 1 < nI; ++k) {
        if (!interface_ok[k] || !interface_ok[k + 1] || touching[k][k + 1]) continue;
        const Polyline& nxt = d.interfaces[k + 1];
        const Vec2 probe = 0.5 * (nxt[0] + nxt[1]);
        if (!point_in_polygon(probe, d.interface_left_region(k)))
            add("interfaces are not ordered (each must lie on the left of the previous)", k, k + 1);
    }

    const int ne = d.edge_count();
    for (int e : d.dirichlet_edges)
        if (e < 0 || e >= ne) add("dirichlet edge index out of range", e, e);
    const auto& m = d.measurement;
    if (m.edges.empty()) add("measurement arc is empty");
    else {
        bool ok = true;
        for (std::size_t k = 0; k < m.edges.size(); ++k) {
            const int e = m.edges[k];
            if (e < 0 || e >= ne) ok = false;
            else if (d.is_dirichlet_edge(e)) ok = false;
            if (k > 0 && e != (m.edges[k - 1] + 1) % ne) ok = false;
        }
        if (!(m.t_start >= 0.0 && m.t_end <= 1.0)) ok = false;
        if (ok && !(d.measurement_length() > 0.0)) ok = false;
        if (!ok) add("measurement arc must be a nonempty contiguous part of the traction-free boundary");
    }
    return r;
}

// ---------------------------------------------------------------- fault

double Fault::length() const {
    double l = 0.0;
    for (int k = 0; k < segment_count(); ++k) l += seg_length(k);
    return l;
}

int Fault::orientation() const { return signed_area(vertices) >= 0.0 ? 1 : -1; }

Vec2 Fault::normal(int k) const {
    const Vec2 t = seg_tangent(k);
    const Vec2 right(t.y(), -t.x());
    return orientation() > 0 ? right : Vec2(-right);
}

bool Fault::encloses(const Vec2& x) const { return point_in_polygon(x, vertices); }

void validate_fault(const Fault& fault, const LayeredDomain& domain) {
    const int n = static_cast<int>(fault.vertices.size());
    if (n < 2 || (fault.closed && n < 3)) throw ValidationError("fault needs at least two segments' worth of vertices", "/fault/vertices");
    const double diam = domain.diameter();
    for (int k = 0; k < fault.segment_count(); ++k)
        if (fault.seg_length(k) < 1e-9 * diam) throw ValidationError("degenerate fault segment", "/fault/vertices");
    if (polyline_self_intersects(fault.vertices, fault.closed)) throw ValidationError("fault is not simple", "/fault/vertices");
    for (const auto& v : fault.vertices) {
        if (!point_in_polygon(v, domain.outer) || domain.boundary_distance(v) <= 1e-6 * diam)
            throw ValidationError("fault touches boundary", "/fault/vertices");
    }
    for (int k = 0; k < fault.segment_count(); ++k)
        for (int e = 0; e < domain.edge_count(); ++e)
            if (segments_intersect(fault.seg_a(k), fault.seg_b(k), domain.edge_a(e), domain.edge_b(e), 1e-6 * diam))
                throw ValidationError("fault touches boundary", "/fault/vertices");
    if (fault.segment_count() >= 2 || fault.closed) (void)detect_corners(fault, domain);
}

std::vector<Corner> detect_corners(const Fault& fault, const LayeredDomain& domain, double collinear_tol) {
    std::vector<Corner> out;
    const int n = static_cast<int>(fault.vertices.size());
    const int first = fault.closed ? 0 : 1;
    const int last = fault.closed ? n - 1 : n - 2;
    const double diam = domain.diameter();
    for (int v = first; v <= last; ++v) {
        const int prev = (v - 1 + n) % n, next = (v + 1) % n;
        const Vec2 p = fault.vertices[v];
        const Vec2 ep = (fault.vertices[prev] - p).normalized();
        const Vec2 en = (fault.vertices[next] - p).normalized();
        const double ang = std::atan2(std::abs(cross2(ep, en)), ep.dot(en));
        if (std::abs(ang - kPi) < collinear_tol) continue;
        if (ang < 1e-12) throw ValidationError("fault folds back on itself", "/fault/vertices");
        Corner c;
        c.vertex = v;
        c.point = p;
        c.theta = ang;
        const int seg_prev = (v - 1 + n) % n;  // segment prev -> v
        const int seg_next = v;                // segment v -> next
        if (cross2(ep, en) > 0) {
            c.dir_min = std::atan2(ep.y(), ep.x());
            c.seg_min = seg_prev;
            c.seg_max = seg_next;
        } else {
            c.dir_min = std::atan2(en.y(), en.x());
            c.seg_min = seg_next;
            c.seg_max = seg_prev;
        }
        const Vec2 bis = (ep + en).normalized();
        const double eps = 1e-6 * std::min((fault.vertices[prev] - p).norm(), (fault.vertices[next] - p).norm());
        c.inside_minus = fault.encloses(p + eps * bis);
        if (!domain.contains(p) || domain.boundary_distance(p) <= 1e-9 * diam)
            throw ValidationError("corner lies on the outer boundary", "/fault/vertices");
        for (const auto& g : domain.interfaces)
            for (std::size_t i = 0; i + 1 < g.size(); ++i)
                if (point_segment_distance(p, g[i], g[i + 1]) <= 1e-9 * diam)
                    throw ValidationError("corner lies on an interface", "/fault/vertices");
        c.layer = domain.layer_of(p);
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------- jumps

JumpData JumpData::constant(int segments, const Vec2& f, const Vec2& g) {
    JumpData j;
    j.f.assign(segments, SegmentPoly::constant(f));
    j.g.assign(segments, SegmentPoly::constant(g));
    return j;
}

OneSided one_sided(const std::vector<SegmentPoly>& p, const Fault& fault, const Corner& c, bool plus_edge) {
    const int seg = plus_edge ? c.seg_max : c.seg_min;
    if (seg < 0 || seg >= static_cast<int>(p.size())) throw ValidationError("jump data missing on a fault segment", "/jumps");
    const bool starts_here = seg == c.vertex;
    if (starts_here) return {p[seg].eval(0.0), p[seg].deriv(0.0)};
    const double L = fault.seg_length(seg);
    return {p[seg].eval(L), Vec2(-p[seg].deriv(L))};
}

AdmissibilityReport check_admissibility(const Fault& fault, const JumpData& jumps, const LayeredDomain& domain,
                                        double tol) {
    AdmissibilityReport rep;
    rep.overall = true;
    for (const auto& c : detect_corners(fault, domain)) {
        const auto fp = one_sided(jumps.f, fault, c, true);
        const auto fm = one_sided(jumps.f, fault, c, false);
        const auto gp = one_sided(jumps.g, fault, c, true);
        const auto gm = one_sided(jumps.g, fault, c, false);
        CornerAdmissibility a;
        a.assumption_I = (fp.value - fm.value).norm() > tol;
        if (!a.assumption_I) {
            const bool flat = fp.derivative.norm() <= tol && fm.derivative.norm() <= tol;
            a.assumption_II = flat && (gp.value - theta_matrix(c.theta) * gm.value).norm() > tol;
        }
        rep.corners.push_back(a);
        rep.overall = rep.overall && (a.assumption_I || a.assumption_II);
    }
    return rep;
}

WeightedNormResult weighted_jump_norm(const std::vector<SegmentPoly>& f, const Fault& fault) {
    if (fault.closed) throw ValidationError("weighted norm is defined for open faults");
    const int ns = fault.segment_count();
    if (static_cast<int>(f.size()) < ns) throw ValidationError("jump data missing on a fault segment");
    std::vector<double> start(ns + 1, 0.0);
    for (int k = 0; k < ns; ++k) start[k + 1] = start[k] + fault.seg_length(k);
    const double L = start[ns];
    const Vec2 e0 = fault.vertices.front(), e1 = fault.vertices.back();

    auto locate = [&](double t) {
        int k = static_cast<int>(std::upper_bound(start.begin(), start.end(), t) - start.begin()) - 1;
        k = std::clamp(k, 0, ns - 1);
        return k;
    };
    // Integrate each half in the distance r from its tip so that rho ~ r keeps
    // full relative precision as r -> 0.
    auto half = [&](double r, bool from_end) {
        const double t = from_end ? L - r : r;
        const int k = locate(t);
        const double s = t - start[k];
        const Vec2 x = fault.seg_a(k) + s * fault.seg_tangent(k);
        double d0 = (x - e0).norm(), d1 = (x - e1).norm();
        if (k == 0) d0 = t;
        if (k == ns - 1) d1 = from_end ? r : L - t;
        const double rho = std::min({d0, d1, 0.25 * L});
        return Complex(f[k].eval(s).squaredNorm() / rho);
    };

    WeightedNormResult res;
    for (int level : {4, 8, 16, 32}) {
        const double eps = 0.5 * L * std::ldexp(1.0, -level);
        std::vector<double> pts = {eps, 0.25 * L, 0.5 * L};
        for (int j = 1; j < level; ++j) pts.push_back(0.5 * L * std::ldexp(1.0, -j));
        double total = 0.0;
        for (bool from_end : {false, true}) {
            auto q = pts;
            for (int k = 1; k < ns; ++k) q.push_back(from_end ? L - start[k] : start[k]);
            q.erase(std::remove_if(q.begin(), q.end(), [&](double r) { return r < eps || r > 0.5 * L; }), q.end());
            std::sort(q.begin(), q.end());
            q.erase(std::unique(q.begin(), q.end(), [&](double x, double y) { return y - x < 1e-12 * L; }), q.end());
            total += integrate_pieces([&](double r) { return half(r, from_end); }, q, 1e-10, 1e-300).value.real();
        }
        res.estimates.push_back(total);
    }
    const double first = res.estimates.front(), lastv = res.estimates.back();
    res.divergent = lastv > 2.0 * first && lastv > 1e-300;
    res.value = std::sqrt(lastv);
    return res;
}

}  // namespace disloc
