#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "thermnet/model.hpp"
#include "thermnet/network.hpp"
#include "thermnet/solvers.hpp"

namespace thermnet {
namespace orbit {

using std::numbers::pi;

inline double deg2rad(double d) { return d * pi / 180.0; }

inline double semi_major_axis(const OrbitSpec& spec) {
    return spec.body_radius + 0.5 * (spec.apogee_altitude + spec.perigee_altitude);
}

inline double eccentricity(const OrbitSpec& spec) {
    const double ra = spec.body_radius + spec.apogee_altitude;
    const double rp = spec.body_radius + spec.perigee_altitude;
    return (ra - rp) / (ra + rp);
}

// Orbital period [s]: 2 pi sqrt(a^3 / mu)
inline double orbital_period(const OrbitSpec& spec) {
    const double a = semi_major_axis(spec);
    return 2.0 * pi * std::sqrt(a * a * a / spec.mu);
}

inline double true_to_eccentric_anomaly(double nu, double e) {
    return 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(0.5 * nu),
                            std::sqrt(1.0 + e) * std::cos(0.5 * nu));
}

// Kepler's equation M = E - e sin E solved by Newton to |dE| < 1e-12.
inline double solve_kepler(double M, double e) {
    M = std::fmod(M, 2.0 * pi);
    if (M < 0.0) M += 2.0 * pi;
    double E = e > 0.8 ? pi : M;
    for (int i = 0; i < 100; ++i) {
        const double g = E - e * std::sin(E) - M;
        const double dE = g / (1.0 - e * std::cos(E));
        E -= dE;
        if (std::abs(dE) < 1e-12) break;
    }
    return E;
}

// Inertial position [km] at time t [s] past the epoch (where the true anomaly
// equals the spec's epoch value).
inline Vec3 kepler_propagate(const OrbitSpec& spec, double t) {
    const double a = semi_major_axis(spec);
    const double e = eccentricity(spec);
    const double n = std::sqrt(spec.mu / (a * a * a));
    const double E0 = true_to_eccentric_anomaly(deg2rad(spec.true_anomaly_epoch), e);
    const double M0 = E0 - e * std::sin(E0);
    const double E = solve_kepler(M0 + n * t, e);
    const double nu = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(0.5 * E),
                                       std::sqrt(1.0 - e) * std::cos(0.5 * E));
    const double r = a * (1.0 - e * std::cos(E));
    const double xp = r * std::cos(nu);
    const double yp = r * std::sin(nu);

    const double cO = std::cos(deg2rad(spec.raan)), sO = std::sin(deg2rad(spec.raan));
    const double ci = std::cos(deg2rad(spec.inclination)), si = std::sin(deg2rad(spec.inclination));
    const double cw = std::cos(deg2rad(spec.argument_of_periapsis));
    const double sw = std::sin(deg2rad(spec.argument_of_periapsis));
    // Rz(raan) * Rx(inc) * Rz(argp) applied to the perifocal vector
    const double x1 = cw * xp - sw * yp;
    const double y1 = sw * xp + cw * yp;
    const double x2 = x1;
    const double y2 = ci * y1;
    const double z2 = si * y1;
    return {cO * x2 - sO * y2, sO * x2 + cO * y2, z2};
}

// Time from the epoch to the first periapsis passage at t >= 0.
inline double time_to_periapsis(const OrbitSpec& spec) {
    const double e = eccentricity(spec);
    const double E0 = true_to_eccentric_anomaly(deg2rad(spec.true_anomaly_epoch), e);
    double M0 = E0 - e * std::sin(E0);
    M0 = std::fmod(M0, 2.0 * pi);
    if (M0 < 0.0) M0 += 2.0 * pi;
    if (M0 == 0.0) return 0.0;
    const double a = semi_major_axis(spec);
    const double n = std::sqrt(spec.mu / (a * a * a));
    return (2.0 * pi - M0) / n;
}

// Unit vector toward the sun at time t.
inline Vec3 sun_direction(const OrbitSpec& spec, double t) {
    if (spec.sun_model == SunDirectionModel::fixed) return spec.sun_direction;
    const double year = 365.25 * 86400.0;
    const double th = 2.0 * pi * t / year;
    return {std::cos(th), std::sin(th), 0.0};
}

enum class EclipseState { sunlit, umbra };

// Cylindrical-shadow model, no penumbra: umbra iff the spacecraft sits on the
// anti-sun side within one planet radius of the sun line.
inline EclipseState eclipse_state(const Vec3& position, const Vec3& sun_dir,
                                  double planet_radius) {
    const Vec3 s = normalized(sun_dir);
    const double along = dot(position, s);
    if (along >= 0.0) return EclipseState::sunlit;
    const Vec3 lateral = position - s * along;
    return norm(lateral) < planet_radius ? EclipseState::umbra : EclipseState::sunlit;
}

// View factor of a planar element to a sphere. `tilt` is the angle between
// the element normal and the direction to the sphere's centre (nadir).
// Nadir-facing: F = (R/r)^2; the grazing branch is the standard analytic
// differential-element-to-sphere solution.
inline double planet_view_factor(double radial_distance, double planet_radius, double tilt) {
    const double H = radial_distance / planet_radius;
    const double alpha = std::asin(std::min(1.0, 1.0 / H));
    if (tilt <= 0.5 * pi - alpha) return std::cos(tilt) / (H * H);
    if (tilt >= 0.5 * pi + alpha) return 0.0;
    const double x = std::sqrt(std::max(0.0, H * H - 1.0));
    const double st = std::sin(tilt);
    const double ct = std::cos(tilt);
    const double a1 = std::asin(std::clamp(x / (H * st), -1.0, 1.0));
    const double a2 = std::acos(std::clamp(-x * ct / st, -1.0, 1.0));
    const double s2 = std::sqrt(std::max(0.0, 1.0 - H * H * ct * ct));
    return 0.5 - a1 / pi + (ct * a2 - x * s2) / (pi * H * H);
}

// Rotation from the model (spacecraft) frame into the inertial frame for the
// given attitude law. sun_oriented points the model's -z axis at the sun (the
// spacecraft's sun-facing side; the instrument stack grows along +z into its
// shadow); nadir points the model's +z axis at the zenith.
inline Rotation attitude_rotation(const OrbitSpec& spec, const Vec3& position, const Vec3& sun) {
    switch (spec.attitude) {
        case Attitude::sun_oriented: return rotation_between({0, 0, -1}, sun);
        case Attitude::nadir: return rotation_between({0, 0, 1}, normalized(position));
        case Attitude::fixed_inertial: return {};
    }
    return {};
}

struct EnvLoadsAtTime {
    std::vector<std::string> face_ids;
    std::vector<double> solar;         // [W] per face, direct solar
    std::vector<double> albedo;        // [W] per face
    std::vector<double> planetary_ir;  // [W] per face
    bool eclipsed = false;
    double radius = 0.0;     // [km]
    double sun_angle = 0.0;  // [rad] between position and sun direction
    EnvNodeLoads node_loads; // solar / (albedo + IR) summed onto nodes
};

// Deposits solar, albedo and planetary IR fluxes onto external faces at time
// t. Planar faces use their (rotated) normal directly; cylinder and cone
// faces are integrated over azimuth stations.
inline EnvLoadsAtTime environmental_loads(const Model& model, const Network& net,
                                          const OrbitSpec& spec, double t) {
    EnvLoadsAtTime env;
    const Vec3 pos = kepler_propagate(spec, t);
    const double r = norm(pos);
    const Vec3 zenith = pos / r;
    const Vec3 sun = normalized(sun_direction(spec, t));
    env.radius = r;
    env.sun_angle = std::acos(std::clamp(dot(zenith, sun), -1.0, 1.0));
    env.eclipsed = eclipse_state(pos, sun, spec.body_radius) == EclipseState::umbra;

    const Rotation att = attitude_rotation(spec, pos, sun);
    const Vec3 nadir = -zenith;
    const double sigma = model.constants.sigma;
    const double ir_flux = sigma * std::pow(spec.ir_temperature, 4);
    const double cos_zen_sun = std::max(0.0, dot(zenith, sun));  // albedo day-side gate

    env.node_loads.solar.assign(net.node_count(), 0.0);
    env.node_loads.planetary.assign(net.node_count(), 0.0);

    for (const auto& f : model.faces) {
        if (!f.external || !f.active) continue;
        const double A = f.area();
        double q_solar = 0.0, q_albedo = 0.0, q_ir = 0.0;

        auto deposit = [&](const Vec3& n_world, double area) {
            const double cos_sun = dot(n_world, sun);
            if (!env.eclipsed && cos_sun > 0.0)
                q_solar += spec.solar_flux_1au * f.alpha * area * cos_sun;
            const double tilt = std::acos(std::clamp(dot(n_world, nadir), -1.0, 1.0));
            const double F = planet_view_factor(r, spec.body_radius, tilt);
            if (F > 0.0) {
                q_ir += ir_flux * f.epsilon * area * F;
                q_albedo += spec.solar_flux_1au * spec.albedo * f.alpha * area * F * cos_zen_sun;
            }
        };

        const Primitive& p = f.primitive;
        if (p.kind == PrimitiveKind::cylinder || p.kind == PrimitiveKind::cone) {
            const int stations = 16;
            const double s = p.kind == PrimitiveKind::cone ? (p.p1 - p.p0) / p.p2 : 0.0;
            const double inv = 1.0 / std::sqrt(1.0 + s * s);
            for (int k = 0; k < stations; ++k) {
                const double phi = 2.0 * pi * (k + 0.5) / stations;
                const Vec3 n_local{std::cos(phi) * inv, std::sin(phi) * inv, -s * inv};
                const Vec3 n_model = p.frame.dir_to_world(n_local) *
                                     static_cast<double>(f.side_sign());
                deposit(att.apply(n_model), A / stations);
            }
        } else {
            const Vec3 n_model = p.frame.uz * static_cast<double>(f.side_sign());
            deposit(att.apply(n_model), A);
        }

        env.face_ids.push_back(f.id);
        env.solar.push_back(q_solar);
        env.albedo.push_back(q_albedo);
        env.planetary_ir.push_back(q_ir);
        const int node = net.node_index(f.node);
        env.node_loads.solar[node] += q_solar;
        env.node_loads.planetary[node] += q_albedo + q_ir;
    }
    return env;
}

// Eclipse entry/exit times within [t0, t1], located by scan plus bisection.
inline std::vector<double> eclipse_crossings(const OrbitSpec& spec, double t0, double t1,
                                             int scan_points = 4096) {
    std::vector<double> out;
    auto shadowed = [&](double t) {
        return eclipse_state(kepler_propagate(spec, t), sun_direction(spec, t),
                             spec.body_radius) == EclipseState::umbra;
    };
    const double h = (t1 - t0) / scan_points;
    bool prev = shadowed(t0);
    for (int i = 1; i <= scan_points; ++i) {
        const double t = t0 + i * h;
        const bool cur = shadowed(t);
        if (cur != prev) {
            double lo = t - h, hi = t;
            for (int b = 0; b < 50; ++b) {
                const double mid = 0.5 * (lo + hi);
                if (shadowed(mid) == prev) lo = mid;
                else hi = mid;
            }
            out.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return out;
}

struct QuasiStationaryResult {
    bool converged = false;
    int cycles = 0;
    double last_delta = 0.0;  // max |dT| between successive cycles at reference [K]
    TransientResult final_cycle;
    // per-cycle, per-node summary
    struct Row {
        int cycle;
        std::string node_id;
        double t_at_reference;
        double max_t;
        double min_t;
    };
    std::vector<Row> summary;
};

// Integrates successive orbital periods until every node's temperature recurs
// at the reference position (periapsis) within tol. The returned final cycle
// is the converged one.
inline QuasiStationaryResult quasi_stationary_run(const Model& model, const Network& net,
                                                  const OrbitSpec& spec, int cycles_max,
                                                  double tol, SolveOptions options = {},
                                                  std::vector<double> T0 = {}) {
    const double period = orbital_period(spec);
    const double t_ref = time_to_periapsis(spec);

    options.env = [&model, &net, &spec](double t) {
        return environmental_loads(model, net, spec, t).node_loads;
    };
    if (options.method != SolveMethod::bdf && options.method != SolveMethod::crank_nicolson)
        options.method = SolveMethod::bdf;
    if (options.output_every <= 0.0) options.output_every = period / 512.0;

    QuasiStationaryResult out;
    std::vector<double> T = T0;
    if (T.empty()) {
        // start from the frozen-environment steady state at the reference point
        EnvNodeLoads env0 = options.env(t_ref);
        SolveOptions st;
        st.env = [&env0](double) { return env0; };
        T = solve_steady_newton(net, {}, st, t_ref).temperatures;
    }

    for (int cycle = 0; cycle < cycles_max; ++cycle) {
        const double a = t_ref + cycle * period;
        const double b = a + period;
        SolveOptions cyc = options;
        cyc.breakpoints = eclipse_crossings(spec, a, b);
        TransientResult tr = solve_transient(net, T, a, b, cyc);

        const std::vector<double>& T_end = tr.temperatures.back();
        double delta = 0.0;
        for (int i : net.unknowns()) delta = std::max(delta, std::abs(T_end[i] - T[i]));

        for (int i = 0; i < net.node_count(); ++i) {
            QuasiStationaryResult::Row row;
            row.cycle = cycle + 1;
            row.node_id = model.nodes[i].id;
            row.t_at_reference = T_end[i];
            row.max_t = -1e300;
            row.min_t = 1e300;
            for (const auto& temps : tr.temperatures) {
                row.max_t = std::max(row.max_t, temps[i]);
                row.min_t = std::min(row.min_t, temps[i]);
            }
            out.summary.push_back(std::move(row));
        }

        T = T_end;
        out.cycles = cycle + 1;
        out.last_delta = delta;
        out.final_cycle = std::move(tr);
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace orbit
}  // namespace thermnet
