#include "disloc/mesh.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>

namespace disloc {

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); }

// > 0 when d lies inside the circumcircle of the counterclockwise triangle abc.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double al = adx * adx + ady * ady;
    const double bl = bdx * bdx + bdy * bdy;
    const double cl = cdx * cdx + cdy * cdy;
    return adx * (bdy * cl - cdy * bl) - ady * (bdx * cl - cdx * bl) + al * (bdx * cdy - cdx * bdy);
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 B = b - a, C = c - a;
    const double d = 2.0 * cross2(B, C);
    const double b2 = B.squaredNorm(), c2 = C.squaredNorm();
    return a + Vec2((C.y() * b2 - B.y() * c2) / d, (B.x() * c2 - C.x() * b2) / d);
}

double min_angle(const Vec2& a, const Vec2& b, const Vec2& c, int* at = nullptr) {
    const std::array<Vec2, 3> p{a, b, c};
    double best = kPi;
    for (int i = 0; i < 3; ++i) {
        const Vec2 u = p[(i + 1) % 3] - p[i], v = p[(i + 2) % 3] - p[i];
        const double ang = std::atan2(std::abs(cross2(u, v)), u.dot(v));
        if (ang < best) {
            best = ang;
            if (at) *at = i;
        }
    }
    return best;
}

// Incremental Bowyer-Watson triangulation inside a large super triangle.
class Delaunay {
public:
    std::vector<Vec2> pts;
    std::vector<std::array<int, 3>> v;
    std::vector<std::array<int, 3>> nb;  // nb[t][i] lies across the edge opposite v[t][i]
    std::vector<char> alive;
    std::vector<int> vtri;
    std::vector<int> created;
    double dup_tol = 0.0;

    Delaunay(const Vec2& lo, const Vec2& hi) {
        const Vec2 c = 0.5 * (lo + hi);
        const double r = 20.0 * std::max((hi - lo).norm(), 1e-300);
        pts = {c + Vec2(-r, -r), c + Vec2(r, -r), c + Vec2(0.0, r)};
        v.push_back({0, 1, 2});
        nb.push_back({-1, -1, -1});
        alive.push_back(1);
        vtri = {0, 0, 0};
        dup_tol = 1e-11 * (hi - lo).norm();
    }

    bool is_super(int p) const { return p < 3; }

    int locate(const Vec2& p) {
        int t = last_;
        if (t < 0 || t >= static_cast<int>(v.size()) || !alive[t]) {
            t = -1;
            for (int k = static_cast<int>(v.size()) - 1; k >= 0; --k)
                if (alive[k]) {
                    t = k;
                    break;
                }
        }
        const long max_steps = 4 * static_cast<long>(v.size()) + 100;
        for (long step = 0; step < max_steps; ++step) {
            const int start = static_cast<int>(next_rand() % 3);
            bool moved = false;
            for (int k = 0; k < 3; ++k) {
                const int i = (start + k) % 3;
                if (orient(pts[v[t][(i + 1) % 3]], pts[v[t][(i + 2) % 3]], p) < 0.0) {
                    t = nb[t][i];
                    moved = true;
                    break;
                }
            }
            if (t < 0) throw NumericalError("mesher: point outside the super triangle");
            if (!moved) return t;
        }
        for (int k = 0; k < static_cast<int>(v.size()); ++k) {
            if (!alive[k]) continue;
            bool inside = true;
            for (int i = 0; i < 3; ++i)
                if (orient(pts[v[k][(i + 1) % 3]], pts[v[k][(i + 2) % 3]], p) < 0.0) inside = false;
            if (inside) return k;
        }
        throw NumericalError("mesher: point location failed");
    }

    // Returns the new vertex id, an existing vertex id if p duplicates one, or -1.
    int insert(const Vec2& p) {
        created.clear();
        const int t0 = locate(p);
        for (int i = 0; i < 3; ++i)
            if ((pts[v[t0][i]] - p).norm() <= dup_tol) return v[t0][i];

        ++epoch_;
        if (stamp_.size() < v.size()) stamp_.resize(v.size(), 0);
        std::vector<int> cav{t0};
        stamp_[t0] = epoch_;
        for (std::size_t k = 0; k < cav.size(); ++k) {
            const int s = cav[k];
            for (int i = 0; i < 3; ++i) {
                const int n = nb[s][i];
                if (n < 0 || stamp_[n] == epoch_) continue;
                if (incircle(pts[v[n][0]], pts[v[n][1]], pts[v[n][2]], p) > 0.0) {
                    stamp_[n] = epoch_;
                    cav.push_back(n);
                }
            }
        }

        struct BEdge {
            int a, b, out, owner;
        };
        std::vector<BEdge> bd;
        // Shrink the cavity until it is star-shaped from p (guards round-off).
        for (int guard = 0; guard < 1000; ++guard) {
            bd.clear();
            int bad_owner = -1;
            for (int s : cav) {
                for (int i = 0; i < 3; ++i) {
                    const int n = nb[s][i];
                    if (n >= 0 && stamp_[n] == epoch_) continue;
                    const int a = v[s][(i + 1) % 3], b = v[s][(i + 2) % 3];
                    if (orient(pts[a], pts[b], p) <= 0.0 && bad_owner < 0) bad_owner = s;
                    bd.push_back({a, b, n, s});
                }
            }
            if (bad_owner < 0) break;
            if (bad_owner == t0) return -1;
            stamp_[bad_owner] = 0;
            // keep only the part still connected to t0
            std::vector<int> keep{t0};
            ++epoch_;
            const int old = epoch_ - 1;
            for (int s : cav)
                if (stamp_[s] == old) stamp_[s] = -old;  // candidate marker
            stamp_[t0] = epoch_;
            for (std::size_t k = 0; k < keep.size(); ++k) {
                const int s = keep[k];
                for (int i = 0; i < 3; ++i) {
                    const int n = nb[s][i];
                    if (n >= 0 && stamp_[n] == -old) {
                        stamp_[n] = epoch_;
                        keep.push_back(n);
                    }
                }
            }
            for (int s : cav)
                if (stamp_[s] == -old) stamp_[s] = 0;
            cav = keep;
        }

        const int q = static_cast<int>(pts.size());
        pts.push_back(p);
        vtri.push_back(-1);
        std::vector<int> nt;
        nt.reserve(bd.size());
        for (const auto& e : bd) {
            int t;
            if (!free_.empty()) {
                t = free_.back();
                free_.pop_back();
                v[t] = {e.a, e.b, q};
                nb[t] = {-1, -1, e.out};
                alive[t] = 1;
            } else {
                t = static_cast<int>(v.size());
                v.push_back({e.a, e.b, q});
                nb.push_back({-1, -1, e.out});
                alive.push_back(1);
            }
            if (e.out >= 0)
                for (int k = 0; k < 3; ++k)
                    if (nb[e.out][k] == e.owner) nb[e.out][k] = t;
            nt.push_back(t);
        }
        for (int s : cav) {
            alive[s] = 0;
            free_.push_back(s);
        }
        // Drop freed slots that were reused this round.
        for (int t : nt) free_.erase(std::remove(free_.begin(), free_.end(), t), free_.end());
        for (int t : nt) {
            const int a = v[t][0], b = v[t][1];
            for (int u : nt) {
                if (v[u][0] == b) nb[t][0] = u;  // edge (b, q)
                if (v[u][1] == a) nb[t][1] = u;  // edge (q, a)
            }
            vtri[a] = t;
            vtri[b] = t;
            vtri[q] = t;
        }
        if (stamp_.size() < v.size()) stamp_.resize(v.size(), 0);
        for (int t : nt) stamp_[t] = 0;
        last_ = nt.front();
        created = nt;
        return q;
    }

    // Triangle t and local index i such that edge (a, b) is opposite v[t][i].
    bool find_edge(int a, int b, int& t_out, int& i_out) const {
        const int t0 = vtri[a];
        int t = t0;
        for (int guard = 0; guard < 10000; ++guard) {
            int i = 0;
            while (v[t][i] != a) ++i;
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            if (v[t][j] == b) {
                t_out = t;
                i_out = k;
                return true;
            }
            if (v[t][k] == b) {
                t_out = t;
                i_out = j;
                return true;
            }
            t = nb[t][j];
            if (t < 0 || t == t0) return false;
        }
        return false;
    }

private:
    int last_ = 0;
    int epoch_ = 0;
    std::vector<int> stamp_;
    std::vector<int> free_;
    std::uint64_t rng_ = 0x9E3779B97F4A7C15ull;
    std::uint64_t next_rand() {
        rng_ ^= rng_ << 13;
        rng_ ^= rng_ >> 7;
        rng_ ^= rng_ << 17;
        return rng_;
    }
};

enum Kind { kOuter = 0, kInterface = 1, kFault = 2 };

struct GeoSeg {
    Vec2 p0, p1;
    Kind kind;
    int index;  // outer edge, interface id, or fault segment
    int sub = 0;  // polyline piece for interfaces
};

struct SubSeg {
    int a, b;
    double ta, tb;  // parameters along the parent GeoSeg
    int geo;
    bool alive = true;
};

}  // namespace

double Mesh::tri_area(int t) const {
    const auto& k = tris[t];
    return 0.5 * orient(nodes[k[0]], nodes[k[1]], nodes[k[2]]);
}

double Mesh::min_angle_deg() const {
    double m = 180.0;
    for (const auto& k : tris) m = std::min(m, min_angle(nodes[k[0]], nodes[k[1]], nodes[k[2]]) * 180.0 / kPi);
    return m;
}

std::vector<char> Mesh::minus_mask() const {
    std::vector<char> m(nodes.size(), 0);
    for (const auto& p : pairs) m[p.minus] = 1;
    return m;
}

void Mesh::write(std::ostream& os) const {
    os.precision(17);
    os << nodes.size() << "\n";
    for (const auto& x : nodes) os << x.x() << " " << x.y() << "\n";
    os << tris.size() << "\n";
    for (std::size_t t = 0; t < tris.size(); ++t)
        os << tris[t][0] << " " << tris[t][1] << " " << tris[t][2] << " " << tri_layer[t] << "\n";
    os << fault_edges.size() << "\n";
    for (std::size_t e = 0; e < fault_edges.size(); ++e) {
        const auto& f = fault_edges[e];
        os << e << " " << f.plus[0] << " " << f.plus[1] << " " << f.minus[0] << " " << f.minus[1] << "\n";
    }
}

namespace {

double ccw_angle(const Vec2& u, const Vec2& w) {
    double a = std::atan2(cross2(u, w), u.dot(w));
    if (a < 0.0) a += 2.0 * kPi;
    return a;
}

// Split interior fault nodes into plus/minus copies. The plus side is the one
// the segment normal points into.
void duplicate_fault_nodes(Mesh& m, const Fault& fault) {
    const int n0 = m.node_count();
    std::vector<std::vector<int>> inc(n0);
    for (int e = 0; e < static_cast<int>(m.fault_edges.size()); ++e) {
        inc[m.fault_edges[e].plus[0]].push_back(e);
        inc[m.fault_edges[e].plus[1]].push_back(e);
    }
    std::vector<std::vector<int>> node_tris(n0);
    for (int t = 0; t < m.tri_count(); ++t)
        for (int k : m.tris[t]) node_tris[k].push_back(t);

    std::vector<int> minus_of(n0, -1);
    for (int p = 0; p < n0; ++p) {
        if (inc[p].empty()) continue;
        if (inc[p].size() == 1) {
            m.tips.push_back(p);
            continue;
        }
        if (inc[p].size() != 2) throw NumericalError("mesher: fault node with more than two fault edges");
        const FaultEdge& e1 = m.fault_edges[inc[p][0]];
        const FaultEdge& e2 = m.fault_edges[inc[p][1]];
        const int q1 = e1.plus[0] == p ? e1.plus[1] : e1.plus[0];
        const int q2 = e2.plus[0] == p ? e2.plus[1] : e2.plus[0];
        const Vec2 d1 = m.nodes[q1] - m.nodes[p], d2 = m.nodes[q2] - m.nodes[p];
        const double A = ccw_angle(d1, d2);
        auto in_wedge = [&](const Vec2& c) {
            const double a = ccw_angle(d1, c);
            return a > 0.0 && a < A;
        };
        const Vec2 probe = 0.5 * d1 + 1e-3 * d1.norm() * fault.normal(e1.segment);
        const bool plus_in = in_wedge(probe);

        const int q = m.node_count();
        m.nodes.push_back(m.nodes[p]);
        minus_of[p] = q;
        for (int t : node_tris[p]) {
            const auto& k = m.tris[t];
            const Vec2 c = (m.nodes[k[0]] + m.nodes[k[1]] + m.nodes[k[2]]) / 3.0 - m.nodes[p];
            if (in_wedge(c) != plus_in)
                for (int& x : m.tris[t])
                    if (x == p) x = q;
        }
        for (auto& ie : m.interface_edges) {
            if (ie.a != p && ie.b != p) continue;
            const int other = ie.a == p ? ie.b : ie.a;
            if (in_wedge(m.nodes[other] - m.nodes[p]) != plus_in) (ie.a == p ? ie.a : ie.b) = q;
        }
        DuplicatePair dp;
        dp.plus = p;
        dp.minus = q;
        for (int e : inc[p]) {
            const FaultEdge& fe = m.fault_edges[e];
            const double s = fe.plus[0] == p ? fe.s[0] : fe.s[1];
            bool seen = false;
            for (const auto& w : dp.where) seen |= w.segment == fe.segment;
            if (!seen) dp.where.push_back({fe.segment, s});
        }
        m.pairs.push_back(dp);
    }
    for (auto& fe : m.fault_edges)
        for (int k = 0; k < 2; ++k) fe.minus[k] = minus_of[fe.plus[k]] >= 0 ? minus_of[fe.plus[k]] : fe.plus[k];
}

}  // namespace

Mesh generate_mesh(const LayeredDomain& domain, const Fault* fault, double h, const MeshOptions& opt) {
    if (!(h > 0.0)) throw ValidationError("mesh size h must be positive", "/mesh/h");
    const auto rep = validate_partition(domain);
    if (!rep.ok()) throw ValidationError("invalid layered domain: " + rep.summary(), "/domain");
    if (fault) validate_fault(*fault, domain);

    const double diam = domain.diameter();
    const double tol = 1e-10 * diam;

    std::vector<GeoSeg> geo;
    for (int k = 0; k < domain.edge_count(); ++k) geo.push_back({domain.edge_a(k), domain.edge_b(k), kOuter, k});
    for (int i = 0; i < static_cast<int>(domain.interfaces.size()); ++i) {
        const auto& pl = domain.interfaces[i];
        for (std::size_t j = 0; j + 1 < pl.size(); ++j) geo.push_back({pl[j], pl[j + 1], kInterface, i, static_cast<int>(j)});
    }
    if (fault)
        for (int k = 0; k < fault->segment_count(); ++k) geo.push_back({fault->seg_a(k), fault->seg_b(k), kFault, k});

    // Parameters of every PSLG vertex along each geometric segment.
    std::vector<std::vector<double>> params(geo.size(), std::vector<double>{0.0, 1.0});
    for (std::size_t i = 0; i < geo.size(); ++i) {
        for (std::size_t j = i + 1; j < geo.size(); ++j) {
            const Vec2 r = geo[i].p1 - geo[i].p0, s = geo[j].p1 - geo[j].p0;
            const double denom = cross2(r, s);
            const Vec2 w = geo[j].p0 - geo[i].p0;
            if (std::abs(denom) > 1e-14 * r.norm() * s.norm()) {
                const double t = cross2(w, s) / denom, u = cross2(w, r) / denom;
                const double et = tol / r.norm(), eu = tol / s.norm();
                if (t >= -et && t <= 1 + et && u >= -eu && u <= 1 + eu) {
                    params[i].push_back(std::clamp(t, 0.0, 1.0));
                    params[j].push_back(std::clamp(u, 0.0, 1.0));
                }
            }
            auto touch = [&](std::size_t a, std::size_t b) {
                for (const Vec2& x : {geo[b].p0, geo[b].p1}) {
                    if (point_segment_distance(x, geo[a].p0, geo[a].p1) <= tol) {
                        const Vec2 d = geo[a].p1 - geo[a].p0;
                        params[a].push_back(std::clamp((x - geo[a].p0).dot(d) / d.squaredNorm(), 0.0, 1.0));
                    }
                }
            };
            touch(i, j);
            touch(j, i);
        }
    }

    Vec2 lo = domain.outer.front(), hi = lo;
    for (const auto& x : domain.outer) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    Delaunay dt(lo, hi);

    std::vector<char> input_vertex(3, 0);
    auto vertex_at = [&](const Vec2& x) {
        for (int k = 3; k < static_cast<int>(dt.pts.size()); ++k)
            if ((dt.pts[k] - x).norm() <= tol) return k;
        const int id = dt.insert(x);
        if (id < 0) throw NumericalError("mesher: failed to insert an input vertex");
        if (static_cast<int>(input_vertex.size()) <= id) input_vertex.resize(id + 1, 0);
        return id;
    };

    std::vector<Vec2> corner_pts;
    if (fault && opt.corner_grading)
        for (const auto& c : detect_corners(*fault, domain)) corner_pts.push_back(c.point);
    auto size_at = [&](const Vec2& x) {
        double s = h;
        for (const auto& c : corner_pts) {
            const double d = (x - c).norm();
            if (d < h) s = std::min(s, h / 8.0);
            else if (d < 2 * h) s = std::min(s, h / 4.0);
            else if (d < 3 * h) s = std::min(s, h / 2.0);
        }
        return s;
    };

    std::vector<SubSeg> segs;
    std::vector<std::vector<Vec2>> dirs_at;  // incident constraint directions per input vertex
    for (std::size_t g = 0; g < geo.size(); ++g) {
        auto& ps = params[g];
        std::sort(ps.begin(), ps.end());
        const double len = (geo[g].p1 - geo[g].p0).norm();
        std::vector<double> uniq;
        for (double t : ps)
            if (uniq.empty() || (t - uniq.back()) * len > tol) uniq.push_back(t);
        if (uniq.back() < 1.0) uniq.back() = 1.0;
        for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
            const double t0 = uniq[k], t1 = uniq[k + 1];
            const Vec2 a = geo[g].p0 + t0 * (geo[g].p1 - geo[g].p0);
            const Vec2 b = geo[g].p0 + t1 * (geo[g].p1 - geo[g].p0);
            const double pl = (b - a).norm();
            if (pl < 1e-6 * diam)
                throw ValidationError("geometry too fine for h: constraint piece of length " + std::to_string(pl),
                                      "/mesh/h");
            const int ia = vertex_at(a), ib = vertex_at(b);
            input_vertex[ia] = input_vertex[ib] = 1;
            if (static_cast<int>(dirs_at.size()) < static_cast<int>(dt.pts.size())) dirs_at.resize(dt.pts.size());
            dirs_at[ia].push_back((b - a).normalized());
            dirs_at[ib].push_back((a - b).normalized());
            const int n = std::max(1, static_cast<int>(std::ceil(pl / std::min(size_at(a), size_at(b)) - 1e-9)));
            int prev = ia;
            double tprev = t0;
            for (int j = 1; j <= n; ++j) {
                const double t = j == n ? t1 : t0 + (t1 - t0) * j / n;
                const int id = j == n ? ib : vertex_at(geo[g].p0 + t * (geo[g].p1 - geo[g].p0));
                segs.push_back({prev, id, tprev, t, static_cast<int>(g)});
                prev = id;
                tprev = t;
            }
        }
    }
    // Input vertices where constraints meet at less than 60 degrees are exempt
    // from the angle test to guarantee termination.
    std::vector<char> small_angle(dt.pts.size(), 0);
    for (std::size_t k = 0; k < dirs_at.size(); ++k) {
        const auto& d = dirs_at[k];
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = i + 1; j < d.size(); ++j)
                if (std::acos(std::clamp(d[i].dot(d[j]), -1.0, 1.0)) < kPi / 3.0 - 1e-9) small_angle[k] = 1;
    }

    std::vector<char> geo_sharp(geo.size(), 0);
    for (std::size_t g = 0; g < geo.size(); ++g)
        for (const Vec2& x : {geo[g].p0, geo[g].p1})
            for (int k = 3; k < static_cast<int>(small_angle.size()); ++k)
                if (small_angle[k] && (dt.pts[k] - x).norm() <= tol) geo_sharp[g] = 1;

    auto encroached = [&](const SubSeg& s) {
        int t, i;
        if (!dt.find_edge(s.a, s.b, t, i)) return true;
        const Vec2& a = dt.pts[s.a];
        const Vec2& b = dt.pts[s.b];
        auto enc = [&](int c) { return !dt.is_super(c) && (a - dt.pts[c]).dot(b - dt.pts[c]) <= 0.0; };
        if (enc(dt.v[t][i])) return true;
        const int o = dt.nb[t][i];
        if (o >= 0)
            for (int c : dt.v[o])
                if (c != s.a && c != s.b && enc(c)) return true;
        return false;
    };

    std::deque<int> tq;
    auto push_created = [&]() {
        for (int t : dt.created) tq.push_back(t);
    };
    std::deque<int> sq;
    auto split = [&](int si) {
        SubSeg s = segs[si];
        const GeoSeg& g = geo[s.geo];
        const Vec2 a = dt.pts[s.a], b = dt.pts[s.b];
        const double L = (b - a).norm();
        double frac = 0.5;
        const bool ia = s.a < static_cast<int>(input_vertex.size()) && input_vertex[s.a];
        const bool ib = s.b < static_cast<int>(input_vertex.size()) && input_vertex[s.b];
        if (ia != ib) {
            // concentric shells around input vertices
            const double d = std::pow(2.0, std::round(std::log2(L / 2.0)));
            if (d >= L / 3.0 && d <= 2.0 * L / 3.0) frac = ia ? d / L : 1.0 - d / L;
        }
        const double tm = s.ta + frac * (s.tb - s.ta);
        const Vec2 m = g.p0 + tm * (g.p1 - g.p0);
        const int q = dt.insert(m);
        if (q < 0 || q == s.a || q == s.b)
            throw NumericalError("mesher: failed to split a constraint segment (kind " + std::to_string(g.kind) + " idx " + std::to_string(g.index) + " at " + std::to_string(a.x()) + "," + std::to_string(a.y()) + ")");
        push_created();
        segs[si].alive = false;
        segs.push_back({s.a, q, s.ta, tm, s.geo});
        segs.push_back({q, s.b, tm, s.tb, s.geo});
        sq.push_back(static_cast<int>(segs.size()) - 2);
        sq.push_back(static_cast<int>(segs.size()) - 1);
        for (int k = 0; k < static_cast<int>(segs.size()) - 2; ++k) {
            const auto& o = segs[k];
            if (o.alive && (dt.pts[o.a] - m).dot(dt.pts[o.b] - m) < 0.0) sq.push_back(k);
        }
    };
    auto drain = [&]() {
        while (!sq.empty()) {
            const int s = sq.front();
            sq.pop_front();
            if (segs[s].alive && encroached(segs[s])) split(s);
            if (static_cast<long>(dt.pts.size()) > opt.max_points)
                throw NumericalError("mesher: point budget exceeded");
        }
    };
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) sq.push_back(s);
    drain();

    const double min_ang = opt.min_angle_deg * kPi / 180.0;
    std::vector<char> skip;
    auto is_bad = [&](int t) {
        const auto& k = dt.v[t];
        for (int x : k)
            if (dt.is_super(x)) return false;
        const Vec2 &a = dt.pts[k[0]], &b = dt.pts[k[1]], &c = dt.pts[k[2]];
        const Vec2 cen = (a + b + c) / 3.0;
        if (!domain.contains(cen)) return false;
        const double area = 0.5 * orient(a, b, c);
        const double R = (a - b).norm() * (b - c).norm() * (c - a).norm() / (4.0 * area);
        if (R > size_at(cen) / std::sqrt(3.0) * (1.0 + 1e-9)) return true;
        int at = 0;
        if (min_angle(a, b, c, &at) < min_ang) {
            // the smallest angle sits opposite the shortest edge; exempt it when
            // that edge hangs off a sharp input corner
            const int p = k[(at + 1) % 3], q = k[(at + 2) % 3];
            auto sharp = [&](int x) { return x < static_cast<int>(small_angle.size()) && small_angle[x]; };
            if (sharp(k[at]) || sharp(p) || sharp(q)) return false;
            return true;
        }
        return false;
    };
    for (int t = 0; t < static_cast<int>(dt.v.size()); ++t)
        if (dt.alive[t]) tq.push_back(t);
    while (!tq.empty()) {
        const int t = tq.front();
        tq.pop_front();
        if (!dt.alive[t]) continue;
        if (static_cast<int>(skip.size()) < static_cast<int>(dt.v.size())) skip.resize(dt.v.size(), 0);
        if (skip[t] || !is_bad(t)) continue;
        const auto k = dt.v[t];
        const Vec2 c = circumcenter(dt.pts[k[0]], dt.pts[k[1]], dt.pts[k[2]]);
        std::vector<int> hit;
        for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
            const auto& o = segs[s];
            if (o.alive && (dt.pts[o.a] - c).dot(dt.pts[o.b] - c) < 0.0) hit.push_back(s);
        }
        if (!hit.empty()) {
            // Near sharp input corners, refuse splits that would undercut the
            // triangle's shortest edge; the skinny triangle stays.
            const Vec2 &pa = dt.pts[k[0]], &pb = dt.pts[k[1]], &pc = dt.pts[k[2]];
            const double shortest = std::min({(pa - pb).norm(), (pb - pc).norm(), (pc - pa).norm()});
            bool refuse = false;
            for (int s : hit) {
                const double len = (dt.pts[segs[s].a] - dt.pts[segs[s].b]).norm();
                if (geo_sharp[segs[s].geo] && 0.5 * len < shortest * (1.0 - 1e-9)) refuse = true;
            }
            if (refuse) {
                skip[t] = 1;
                continue;
            }
            for (int s : hit)
                if (segs[s].alive) split(s);
            drain();
            tq.push_back(t);
            continue;
        }
        if (!domain.contains(c)) {
            skip[t] = 1;
            continue;
        }
        const int before = static_cast<int>(dt.pts.size());
        const int q = dt.insert(c);
        if (q < before) {
            if (static_cast<int>(skip.size()) <= t) skip.resize(t + 1, 0);
            skip[t] = 1;
            continue;
        }
        if (static_cast<int>(skip.size()) < static_cast<int>(dt.v.size())) skip.resize(dt.v.size(), 0);
        for (int n : dt.created) skip[n] = 0;
        push_created();
        if (static_cast<long>(dt.pts.size()) > opt.max_points) throw NumericalError("mesher: point budget exceeded");
    }

    for (const auto& s : segs)
        if (s.alive && encroached(s)) {
            int tt, ii;
            if (!dt.find_edge(s.a, s.b, tt, ii)) throw NumericalError("mesher: constraint segment not recovered");
        }

    // Extract the interior triangulation.
    Mesh m;
    m.h = h;
    std::vector<int> remap(dt.pts.size(), -1);
    for (int t = 0; t < static_cast<int>(dt.v.size()); ++t) {
        if (!dt.alive[t]) continue;
        const auto& k = dt.v[t];
        if (dt.is_super(k[0]) || dt.is_super(k[1]) || dt.is_super(k[2])) continue;
        const Vec2 cen = (dt.pts[k[0]] + dt.pts[k[1]] + dt.pts[k[2]]) / 3.0;
        if (!domain.contains(cen)) continue;
        std::array<int, 3> tri{};
        for (int i = 0; i < 3; ++i) {
            if (remap[k[i]] < 0) {
                remap[k[i]] = -2;  // placeholder, ordered below
            }
            tri[i] = k[i];
        }
        m.tris.push_back(tri);
        m.tri_layer.push_back(domain.layer_of(cen));
    }
    int next = 0;
    for (int p = 3; p < static_cast<int>(dt.pts.size()); ++p)
        if (remap[p] == -2) {
            remap[p] = next++;
            m.nodes.push_back(dt.pts[p]);
        }
    for (auto& tri : m.tris)
        for (int& x : tri) x = remap[x];

    for (const auto& s : segs) {
        if (!s.alive) continue;
        const GeoSeg& g = geo[s.geo];
        int a = remap[s.a], b = remap[s.b];
        double ta = s.ta, tb = s.tb;
        if (a < 0 || b < 0) throw NumericalError("mesher: constraint vertex missing from mesh");
        if (ta > tb) {
            std::swap(a, b);
            std::swap(ta, tb);
        }
        if (g.kind == kOuter) {
            BoundaryEdge be;
            be.a = a;
            be.b = b;
            be.outer_edge = g.index;
            be.tag = domain.is_dirichlet_edge(g.index) ? BoundaryTag::Dirichlet : BoundaryTag::Traction;
            if (!domain.measurement.edges.empty()) {
                const double P = domain.perimeter();
                const double pos = domain.boundary_position(0.5 * (m.nodes[a] + m.nodes[b]));
                const double rel = std::fmod(pos - domain.measurement_start() + 2.0 * P, P);
                be.measured = rel <= domain.measurement_length();
            }
            m.boundary.push_back(be);
        } else if (g.kind == kInterface) {
            m.interface_edges.push_back({a, b, g.index});
        } else {
            FaultEdge fe;
            fe.segment = g.index;
            fe.plus = {a, b};
            const double len = (g.p1 - g.p0).norm();
            fe.s = {ta * len, tb * len};
            m.fault_edges.push_back(fe);
        }
    }
    auto by_param = [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); };
    std::sort(m.boundary.begin(), m.boundary.end(), [&](const BoundaryEdge& x, const BoundaryEdge& y) {
        return x.outer_edge != y.outer_edge ? x.outer_edge < y.outer_edge : by_param(x, y);
    });
    std::sort(m.fault_edges.begin(), m.fault_edges.end(), [](const FaultEdge& x, const FaultEdge& y) {
        return x.segment != y.segment ? x.segment < y.segment : x.s[0] < y.s[0];
    });
    std::sort(m.interface_edges.begin(), m.interface_edges.end(), [&](const InterfaceEdge& x, const InterfaceEdge& y) {
        return x.interface != y.interface ? x.interface < y.interface : by_param(x, y);
    });

    if (fault) duplicate_fault_nodes(m, *fault);
    spdlog::debug("mesh: {} nodes, {} triangles, {} fault edges, min angle {:.2f}", m.node_count(), m.tri_count(),
                  m.fault_edges.size(), m.min_angle_deg());
    return m;
}

Mesh refine(const Mesh& old) {
    Mesh m;
    m.h = 0.5 * old.h;
    m.nodes = old.nodes;
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        const int id = m.node_count();
        m.nodes.push_back(0.5 * (old.nodes[a] + old.nodes[b]));
        mid.emplace(key, id);
        return id;
    };
    for (int t = 0; t < old.tri_count(); ++t) {
        const auto [a, b, c] = old.tris[t];
        const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
        const int L = old.tri_layer[t];
        m.tris.push_back({a, ab, ca});
        m.tris.push_back({ab, b, bc});
        m.tris.push_back({ca, bc, c});
        m.tris.push_back({ab, bc, ca});
        for (int k = 0; k < 4; ++k) m.tri_layer.push_back(L);
    }
    m.pairs = old.pairs;
    m.tips = old.tips;
    for (const auto& fe : old.fault_edges) {
        const int mp = midpoint(fe.plus[0], fe.plus[1]);
        const int mm = midpoint(fe.minus[0], fe.minus[1]);
        const double sm = 0.5 * (fe.s[0] + fe.s[1]);
        m.fault_edges.push_back({fe.segment, {fe.plus[0], mp}, {fe.minus[0], mm}, {fe.s[0], sm}});
        m.fault_edges.push_back({fe.segment, {mp, fe.plus[1]}, {mm, fe.minus[1]}, {sm, fe.s[1]}});
        DuplicatePair dp;
        dp.plus = mp;
        dp.minus = mm;
        dp.where.push_back({fe.segment, sm});
        m.pairs.push_back(dp);
    }
    for (const auto& be : old.boundary) {
        const int c = midpoint(be.a, be.b);
        BoundaryEdge x = be, y = be;
        x.b = c;
        y.a = c;
        m.boundary.push_back(x);
        m.boundary.push_back(y);
    }
    for (const auto& ie : old.interface_edges) {
        const int c = midpoint(ie.a, ie.b);
        m.interface_edges.push_back({ie.a, c, ie.interface});
        m.interface_edges.push_back({c, ie.b, ie.interface});
    }
    return m;
}

TriangleLocator::TriangleLocator(const Mesh& mesh) : mesh_(&mesh) {
    lo_ = mesh.nodes.front();
    hi_ = lo_;
    for (const auto& x : mesh.nodes) {
        lo_ = lo_.cwiseMin(x);
        hi_ = hi_.cwiseMax(x);
    }
    const Vec2 ext = hi_ - lo_;
    const double n = std::max(1.0, std::sqrt(static_cast<double>(mesh.tri_count())));
    nx_ = std::max(1, static_cast<int>(n * ext.x() / std::max(ext.x(), ext.y())));
    ny_ = std::max(1, static_cast<int>(n * ext.y() / std::max(ext.x(), ext.y())));
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    auto cell = [&](double v, double l, double e, int n) {
        return std::clamp(static_cast<int>((v - l) / std::max(e, 1e-300) * n), 0, n - 1);
    };
    for (int t = 0; t < mesh.tri_count(); ++t) {
        Vec2 a = mesh.nodes[mesh.tris[t][0]], b = a;
        for (int k : mesh.tris[t]) {
            a = a.cwiseMin(mesh.nodes[k]);
            b = b.cwiseMax(mesh.nodes[k]);
        }
        const int i0 = cell(a.x(), lo_.x(), ext.x(), nx_), i1 = cell(b.x(), lo_.x(), ext.x(), nx_);
        const int j0 = cell(a.y(), lo_.y(), ext.y(), ny_), j1 = cell(b.y(), lo_.y(), ext.y(), ny_);
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) cells_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
    }
    tri_side_.assign(mesh.tri_count(), 0);
    std::vector<int> side(mesh.node_count(), 0);
    for (const auto& p : mesh.pairs) {
        side[p.plus] = 1;
        side[p.minus] = -1;
    }
    for (int t = 0; t < mesh.tri_count(); ++t)
        for (int k : mesh.tris[t])
            if (side[k] != 0) tri_side_[t] = side[k];
}

int TriangleLocator::locate(const Vec2& x, std::array<double, 3>* bary, double tol) const {
    return locate_side(x, 0, bary, tol);
}

int TriangleLocator::locate_side(const Vec2& x, int side, std::array<double, 3>* bary, double tol) const {
    const Vec2 ext = hi_ - lo_;
    const double slack = tol * std::max(ext.x(), ext.y());
    if (x.x() < lo_.x() - slack || x.x() > hi_.x() + slack || x.y() < lo_.y() - slack || x.y() > hi_.y() + slack)
        return -1;
    const int i = std::clamp(static_cast<int>((x.x() - lo_.x()) / std::max(ext.x(), 1e-300) * nx_), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>((x.y() - lo_.y()) / std::max(ext.y(), 1e-300) * ny_), 0, ny_ - 1);
    int best = -1;
    double best_min = -1e300;
    std::array<double, 3> best_b{};
    for (int t : cells_[static_cast<std::size_t>(j) * nx_ + i]) {
        if (side != 0 && tri_side_[t] != 0 && tri_side_[t] != side) continue;
        const auto& k = mesh_->tris[t];
        const Vec2 &a = mesh_->nodes[k[0]], &b = mesh_->nodes[k[1]], &c = mesh_->nodes[k[2]];
        const double A = orient(a, b, c);
        const std::array<double, 3> l{orient(x, b, c) / A, orient(a, x, c) / A, orient(a, b, x) / A};
        const double mn = std::min({l[0], l[1], l[2]});
        if (mn > best_min) {
            best_min = mn;
            best = t;
            best_b = l;
        }
    }
    if (best < 0 || best_min < -tol) return -1;
    if (bary) *bary = best_b;
    return best;
}

}  // namespace disloc
