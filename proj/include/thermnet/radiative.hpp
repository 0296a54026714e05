#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "thermnet/geometry.hpp"
#include "thermnet/model.hpp"
#include "thermnet/rad_matrix.hpp"
#include "thermnet/rng.hpp"

namespace thermnet {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
    int emitting_face = -1;
    double weight = 1.0;
};

// Immutable ray-tracing view of the model's active faces. Faces are one-sided:
// a ray interacts with a face only when approaching its declared side; from
// the other side the face is transparent. Two-sided plates are modelled as two
// face entries sharing a primitive.
struct Scene {
    struct Face {
        std::string id;
        std::string node;
        Primitive prim;
        int side_sign = 1;  // +1 front, -1 back
        double alpha = 1.0;
        double epsilon = 1.0;
        Reflection reflection = Reflection::diffuse;
        bool high_accuracy = false;
        double area = 0.0;
    };
    std::vector<Face> faces;
    double eps_t = 1e-9;  // minimum ray-advance distance

    static Scene from_model(const Model& model) {
        Scene s;
        double extent = 1.0;
        for (const auto& f : model.faces) {
            if (!f.active) continue;
            Face sf;
            sf.id = f.id;
            sf.node = f.node;
            sf.prim = f.primitive;
            sf.side_sign = f.side_sign();
            sf.alpha = f.alpha;
            sf.epsilon = f.epsilon;
            sf.reflection = f.reflection;
            sf.high_accuracy = f.high_accuracy;
            sf.area = f.area();
            extent = std::max(extent, norm(f.primitive.frame.origin) + f.primitive.bounding_radius());
            s.faces.push_back(std::move(sf));
        }
        s.eps_t = 1e-9 * extent;
        return s;
    }

    struct SurfaceHit {
        int face = -1;
        double t = 0.0;
        Vec3 point;
        Vec3 side_normal;  // outward normal of the struck (declared) side
    };

    // Nearest face struck on its declared side, or nullopt (escape to space).
    std::optional<SurfaceHit> nearest_hit(const Vec3& origin, const Vec3& dir) const {
        SurfaceHit best;
        best.t = 1e300;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            const Face& f = faces[i];
            const auto h = f.prim.intersect(origin, dir, eps_t);
            if (!h || h->t >= best.t) continue;
            const Vec3 n_side = h->front_normal * static_cast<double>(f.side_sign);
            if (dot(dir, n_side) >= -1e-15) continue;  // struck the undeclared side
            best.face = static_cast<int>(i);
            best.t = h->t;
            best.point = h->point;
            best.side_normal = n_side;
        }
        if (best.face < 0) return std::nullopt;
        return best;
    }
};

// Lambertian emission: origin uniform over the face area, direction
// cosine-weighted about the declared side's normal.
inline Ray sample_emission(const Scene& scene, int face_idx, CounterRng& rng) {
    const Scene::Face& f = scene.faces[face_idx];
    const auto s = f.prim.sample(rng);
    const Vec3 n_side = s.front_normal * static_cast<double>(f.side_sign);
    Ray r;
    r.origin = s.point;
    r.direction = sample_cosine_hemisphere(n_side, rng);
    r.emitting_face = face_idx;
    return r;
}

struct TraceResult {
    enum class Kind { absorbed, escaped, capped } kind = Kind::escaped;
    int face = -1;      // terminal face for absorbed/capped
    int bounces = 0;
};

inline constexpr int trace_bounce_cap = 64;

inline TraceResult trace_ray(const Scene& scene, Ray ray, CounterRng& rng) {
    TraceResult result;
    Vec3 o = ray.origin;
    Vec3 d = ray.direction;
    int last_face = -1;
    for (int bounce = 0; bounce < trace_bounce_cap; ++bounce) {
        const auto hit = scene.nearest_hit(o, d);
        if (!hit) {
            result.kind = TraceResult::Kind::escaped;
            result.face = -1;
            result.bounces = bounce;
            return result;
        }
        const Scene::Face& f = scene.faces[hit->face];
        last_face = hit->face;
        if (rng.next_double() < f.alpha) {
            result.kind = TraceResult::Kind::absorbed;
            result.face = hit->face;
            result.bounces = bounce;
            return result;
        }
        o = hit->point;
        if (f.reflection == Reflection::diffuse) {
            d = sample_cosine_hemisphere(hit->side_normal, rng);
        } else {
            d = normalized(d - hit->side_normal * (2.0 * dot(d, hit->side_normal)));
        }
        result.bounces = bounce + 1;
    }
    // cap exceeded: score at the last struck face and flag in diagnostics
    result.kind = TraceResult::Kind::capped;
    result.face = last_face;
    return result;
}

struct TraceOptions {
    std::int64_t rays_default = 10000;
    std::int64_t rays_high_accuracy = 100000;
    std::map<std::string, std::int64_t> rays_per_face;  // overrides
    std::uint64_t seed = 0x7468726d6e657431ULL;
    int threads = 0;  // 0 = hardware concurrency
};

// Monte Carlo radiative exchange factors GR(i,j) = A_i eps_i * (fraction of
// rays from i terminally absorbed at j). Deterministic for a fixed seed and
// budgets: every (face, ray index) pair draws from its own counter-based
// substream and tallies are integers, so results are independent of thread
// count and scheduling.
inline RadCouplingMatrix compute_exchange_factors(const Scene& scene, const TraceOptions& opt) {
    const int n = static_cast<int>(scene.faces.size());
    RadCouplingMatrix m;
    m.seed = opt.seed;
    m.method = "montecarlo";
    m.symmetrized = false;

    std::vector<std::int64_t> budgets(n, 0);
    for (int i = 0; i < n; ++i) {
        const auto& f = scene.faces[i];
        if (auto it = opt.rays_per_face.find(f.id); it != opt.rays_per_face.end())
            budgets[i] = it->second;
        else
            budgets[i] = f.high_accuracy ? opt.rays_high_accuracy : opt.rays_default;
        if (f.epsilon <= 0.0) budgets[i] = 0;  // non-emitting row
    }

    // absorbed[i][j]; column n = escaped, column n+1 = capped-at-face tally
    std::vector<std::vector<std::int64_t>> absorbed(n, std::vector<std::int64_t>(n + 1, 0));
    std::vector<std::int64_t> capped(n, 0);

    std::atomic<int> next_face{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next_face.fetch_add(1);
            if (i >= n) return;
            auto& row = absorbed[i];
            for (std::int64_t k = 0; k < budgets[i]; ++k) {
                CounterRng rng(opt.seed, static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(k));
                Ray ray = sample_emission(scene, i, rng);
                const TraceResult r = trace_ray(scene, ray, rng);
                if (r.kind == TraceResult::Kind::escaped) {
                    ++row[n];
                } else {
                    ++row[r.face];
                    if (r.kind == TraceResult::Kind::capped) ++capped[i];
                }
            }
        }
    };

    int n_threads = opt.threads > 0 ? opt.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = std::min<int>(n_threads, std::max(1, n));
    std::vector<std::thread> pool;
    for (int w = 1; w < n_threads; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (int i = 0; i < n; ++i) {
        const auto& fi = scene.faces[i];
        m.rays_used[fi.id] = budgets[i];
        m.area_epsilon[fi.id] = fi.area * fi.epsilon;
        m.capped_rays += capped[i];
        if (budgets[i] == 0) continue;
        const double scale = fi.area * fi.epsilon / static_cast<double>(budgets[i]);
        const double inv_n = 1.0 / static_cast<double>(budgets[i]);
        for (int j = 0; j <= n; ++j) {
            const std::int64_t c = absorbed[i][j];
            if (c == 0) continue;
            const double p = static_cast<double>(c) * inv_n;
            RadEntry e;
            e.a = fi.id;
            e.b = j < n ? scene.faces[j].id : space_node_id;
            e.gr = scale * static_cast<double>(c);
            e.stderr_est = fi.area * fi.epsilon * std::sqrt(p * (1.0 - p) * inv_n);
            m.entries.push_back(std::move(e));
        }
    }
    return m;
}

// Enforces reciprocity: GR'(i,j) = (GR(i,j) + GR(j,i)) / 2, then recomputes
// each face's space entry so the emitted-power bookkeeping
// sum_j GR'(i,j) + GR'(i,space) = A_i eps_i is preserved exactly.
inline RadCouplingMatrix symmetrize(const RadCouplingMatrix& raw) {
    if (raw.symmetrized) return raw;
    RadCouplingMatrix m;
    m.rays_used = raw.rays_used;
    m.area_epsilon = raw.area_epsilon;
    m.seed = raw.seed;
    m.method = raw.method;
    m.capped_rays = raw.capped_rays;
    m.symmetrized = true;

    std::map<std::pair<std::string, std::string>, std::pair<double, double>> sums;
    for (const auto& e : raw.entries) {
        if (e.b == space_node_id) continue;
        auto key = e.a <= e.b ? std::make_pair(e.a, e.b) : std::make_pair(e.b, e.a);
        auto& acc = sums[key];
        acc.first += e.gr;
        acc.second += e.stderr_est * e.stderr_est;
    }
    std::map<std::string, double> row_total;
    for (const auto& [key, acc] : sums) {
        RadEntry e;
        e.a = key.first;
        e.b = key.second;
        e.gr = key.first == key.second ? acc.first : 0.5 * acc.first;
        e.stderr_est = 0.5 * std::sqrt(acc.second);
        row_total[e.a] += e.gr;
        if (e.b != e.a) row_total[e.b] += e.gr;
        m.entries.push_back(std::move(e));
    }
    for (const auto& [face, aeps] : m.area_epsilon) {
        if (raw.rays_used.count(face) && raw.rays_used.at(face) == 0) continue;
        RadEntry e;
        e.a = face;
        e.b = space_node_id;
        e.gr = aeps - row_total[face];
        if (e.gr < 0.0 && e.gr > -1e-12 * std::max(aeps, 1.0)) e.gr = 0.0;
        m.entries.push_back(std::move(e));
    }
    return m;
}

// View factor between coaxial parallel discs of radii r1 (emitter) and r2
// separated by h: F = (X - sqrt(X^2 - 4 (R2/R1)^2)) / 2 with R = r/h.
inline double analytic_view_factor_coaxial_discs(double r1, double r2, double h) {
    const double R1 = r1 / h;
    const double R2 = r2 / h;
    const double X = 1.0 + (1.0 + R2 * R2) / (R1 * R1);
    return 0.5 * (X - std::sqrt(X * X - 4.0 * (R2 / R1) * (R2 / R1)));
}

}  // namespace thermnet
