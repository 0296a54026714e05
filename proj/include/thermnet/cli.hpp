#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thermnet/linear_response.hpp"
#include "thermnet/model_json.hpp"
#include "thermnet/network.hpp"
#include "thermnet/orbit.hpp"
#include "thermnet/radiative.hpp"
#include "thermnet/solvers.hpp"
#include "thermnet/version.hpp"

namespace thermnet {
namespace cli {

inline constexpr std::uint64_t default_seed = 0x7468726d6e657431ULL;

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

struct RunContext {
    std::string command;
    std::string model_path;
    std::string model_text;
    std::filesystem::path out_dir;
    std::uint64_t seed = default_seed;
    int threads = 0;
    nlohmann::json options;  // echoed flag values
};

inline void write_manifest(const RunContext& ctx) {
    nlohmann::json m;
    m["command"] = ctx.command;
    m["model"] = ctx.model_path;
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(ctx.model_text)));
        m["model_hash_fnv1a64"] = buf;
    }
    m["seed"] = ctx.seed;
    m["threads"] = ctx.threads;
    m["options"] = ctx.options;
    m["version"] = version_string;
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char ts[32];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    m["generated_utc"] = ts;
    write_file(ctx.out_dir / "manifest.json", m.dump(2) + "\n");
}

// Computes (and symmetrizes) Monte Carlo exchange factors when the model has
// geometry but no inline rad_couplings block.
inline void ensure_rad_couplings(Model& model, std::uint64_t seed, int threads,
                                 std::int64_t rays_default = 10000) {
    if (model.rad_couplings) return;
    bool any_emitting = false;
    for (const auto& f : model.faces)
        if (f.active && f.epsilon > 0.0) { any_emitting = true; break; }
    if (!any_emitting) return;
    TraceOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    opt.rays_default = rays_default;
    opt.rays_high_accuracy = std::max<std::int64_t>(100000, 10 * rays_default);
    const Scene scene = Scene::from_model(model);
    model.rad_couplings = symmetrize(compute_exchange_factors(scene, opt));
}

inline int env_threads() {
    if (const char* v = std::getenv("THERMNET_THREADS")) {
        const int n = std::atoi(v);
        if (n > 0) return n;
    }
    return 0;
}

struct CsvWriter {
    std::ostringstream os;
    explicit CsvWriter(const std::string& header) { os << header << "\n"; }
    template <typename... Cols>
    void row(const Cols&... cols) {
        bool first = true;
        ((os << (first ? "" : ",") << cols, first = false), ...);
        os << "\n";
    }
};

inline int cmd_radk(RunContext& ctx, Model& model, std::int64_t rays) {
    TraceOptions opt;
    opt.seed = ctx.seed;
    opt.threads = ctx.threads;
    opt.rays_default = rays;
    opt.rays_high_accuracy = std::max<std::int64_t>(100000, 10 * rays);
    const Scene scene = Scene::from_model(model);
    const RadCouplingMatrix raw = compute_exchange_factors(scene, opt);
    const RadCouplingMatrix sym = symmetrize(raw);

    nlohmann::json out;
    out["rad_couplings"] = model_json_detail::rad_couplings_to_json(sym);
    write_file(ctx.out_dir / "rad_couplings.json", out.dump(2) + "\n");

    CsvWriter csv("a,b,gr_m2,stderr_m2,rays");
    for (const auto& e : sym.entries) {
        const auto it = sym.rays_used.find(e.a);
        csv.row(e.a, e.b, fmt_double(e.gr), fmt_double(e.stderr_est),
                it == sym.rays_used.end() ? 0 : it->second);
    }
    write_file(ctx.out_dir / "radk_diagnostics.csv", csv.os.str());
    write_manifest(ctx);
    std::cout << "wrote " << sym.entries.size() << " couplings ("
              << raw.capped_rays << " capped rays)\n";
    return 0;
}

inline int cmd_solve_steady(RunContext& ctx, Model& model, const std::string& method) {
    ensure_rad_couplings(model, ctx.seed, ctx.threads);
    const Network net(model);
    SolveOptions opt;
    opt.method = method == "iterative" ? SolveMethod::iterative : SolveMethod::newton;
    const SteadyResult res = opt.method == SolveMethod::iterative
                                 ? solve_steady_iterative(net, {}, opt)
                                 : solve_steady_newton(net, {}, opt);
    CsvWriter csv("node_id,temperature_K");
    for (int i = 0; i < net.node_count(); ++i)
        csv.row(model.nodes[i].id, fmt_double(res.temperatures[i]));
    write_file(ctx.out_dir / "steady.csv", csv.os.str());
    write_manifest(ctx);
    std::cout << "steady state in " << res.iterations << " iterations, max residual "
              << res.residual_max << " W\n";
    return 0;
}

inline void write_transient_csv(const std::filesystem::path& path, const Model& model,
                                const TransientResult& tr) {
    CsvWriter csv("time_s,node_id,temperature_K");
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        for (std::size_t i = 0; i < model.nodes.size(); ++i)
            csv.row(fmt_double(tr.times[k]), model.nodes[i].id,
                    fmt_double(tr.temperatures[k][i]));
    write_file(path, csv.os.str());
}

inline int cmd_solve_transient(RunContext& ctx, Model& model, const std::string& method,
                               double t_end, double dt0, double output_every, double until_rate) {
    ensure_rad_couplings(model, ctx.seed, ctx.threads);
    const Network net(model);
    SolveOptions opt;
    opt.method = method == "bdf" ? SolveMethod::bdf : SolveMethod::crank_nicolson;
    opt.dt_initial = dt0;
    opt.output_every = output_every;
    opt.stop_rate = until_rate;
    const TransientResult tr = solve_transient(net, {}, 0.0, t_end, opt);
    write_transient_csv(ctx.out_dir / "transient.csv", model, tr);
    write_manifest(ctx);
    std::cout << "integrated to t = " << tr.times.back() << " s in " << tr.accepted_steps
              << " steps (" << tr.rejected_steps << " rejected)\n";
    return 0;
}

inline int cmd_transfer(RunContext& ctx, Model& model, const std::string& input_spec, double fmin,
                        double fmax, int points) {
    ensure_rad_couplings(model, ctx.seed, ctx.threads);
    const Network net(model);

    ResponseInput input;
    const auto colon = input_spec.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--input must be boundary:<node> or power:<node>");
    const std::string kind = input_spec.substr(0, colon);
    input.node = input_spec.substr(colon + 1);
    if (kind == "boundary") input.kind = ResponseInput::Kind::boundary_temperature;
    else if (kind == "power") input.kind = ResponseInput::Kind::power;
    else throw CLI::ValidationError("--input must be boundary:<node> or power:<node>");

    const SteadyResult steady = solve_steady_newton(net);
    const LinearizedSystem sys = linearize(net, steady.temperatures);
    const GainSpectrum spec = frequency_response(sys, input, log_frequency_grid(fmin, fmax, points));

    CsvWriter csv("frequency_hz,node_id,gain_" +
                  std::string(spec.unit == "K/K" ? "K_per_K" : "K_per_W") + ",phase_rad");
    for (std::size_t q = 0; q < spec.frequencies.size(); ++q)
        for (std::size_t k = 0; k < spec.node_ids.size(); ++k)
            csv.row(fmt_double(spec.frequencies[q]), spec.node_ids[k],
                    fmt_double(spec.gain[q][k]), fmt_double(spec.phase[q][k]));
    write_file(ctx.out_dir / "transfer.csv", csv.os.str());
    write_manifest(ctx);
    std::cout << "gain spectrum over " << spec.frequencies.size() << " frequencies ("
              << spec.unit << ")\n";
    return 0;
}

inline int cmd_heatflow(RunContext& ctx, Model& model, const std::vector<std::string>& chain) {
    ensure_rad_couplings(model, ctx.seed, ctx.threads);
    const Network net(model);
    const SteadyResult steady = solve_steady_newton(net);
    const FlowReport rep = heat_flow_report(net, steady.temperatures, 0.0, chain);

    CsvWriter csv("from,to,kind,watts");
    for (const auto& f : rep.flows)
        csv.row(f.from, f.to, flow_kind_name(f.kind), fmt_double(f.watts));
    write_file(ctx.out_dir / "flows.csv", csv.os.str());

    std::ostringstream dot;
    dot << "digraph heatflow {\n  rankdir=TB;\n";
    for (const auto& f : rep.flows) {
        if (f.kind != FlowKind::radiative && f.kind != FlowKind::conductive) continue;
        const bool fwd = f.watts >= 0.0;
        dot << "  \"" << (fwd ? f.from : f.to) << "\" -> \"" << (fwd ? f.to : f.from)
            << "\" [label=\"" << fmt_double(std::abs(f.watts)) << " W\", penwidth="
            << fmt_double(std::min(8.0, 0.5 + 2.0 * std::log10(1.0 + std::abs(f.watts) * 1e3)))
            << (f.kind == FlowKind::radiative ? ", color=purple" : ", color=orange") << "];\n";
    }
    dot << "}\n";
    write_file(ctx.out_dir / "flows.dot", dot.str());

    if (!chain.empty()) {
        CsvWriter gcsv("from_group,to_group,watts");
        for (std::size_t k = 0; k + 1 < chain.size(); ++k)
            gcsv.row(chain[k], chain[k + 1], fmt_double(rep.chain_flows[k]));
        write_file(ctx.out_dir / "chain_flows.csv", gcsv.os.str());
    }
    write_manifest(ctx);
    std::cout << rep.flows.size() << " flows written\n";
    return 0;
}

inline int cmd_orbit(RunContext& ctx, Model& model, const std::string& scenario, int cycles_max,
                     double tol, double t_end, double output_every, const std::string& method) {
    ensure_rad_couplings(model, ctx.seed, ctx.threads);
    const Network net(model);
    SolveOptions opt;
    opt.method = method == "cn" ? SolveMethod::crank_nicolson : SolveMethod::bdf;
    opt.output_every = output_every;

    if (scenario == "l2") {
        // cool-down from a uniform ambient start with deep space as the only sink
        std::vector<double> T0(net.node_count(), 293.15);
        for (int i = 0; i < net.node_count(); ++i)
            if (model.nodes[i].kind == NodeKind::boundary) T0[i] = model.nodes[i].temperature;
        opt.stop_rate = 1e-8;
        if (t_end <= 0.0) t_end = 200.0 * 86400.0;
        if (opt.output_every <= 0.0) opt.output_every = t_end / 2000.0;
        const TransientResult tr = solve_transient(net, T0, 0.0, t_end, opt);
        write_transient_csv(ctx.out_dir / "transient.csv", model, tr);
        write_manifest(ctx);
        std::cout << "L2 cool-down to t = " << tr.times.back() << " s"
                  << (tr.stopped_on_rate ? " (steady rate reached)" : "") << "\n";
        return 0;
    }
    if (scenario != "heo") throw CLI::ValidationError("--scenario must be l2 or heo");
    if (!model.orbit) throw ModelError("model has no orbit block");

    const orbit::QuasiStationaryResult qs =
        orbit::quasi_stationary_run(model, net, *model.orbit, cycles_max, tol, opt);
    write_transient_csv(ctx.out_dir / "transient.csv", model, qs.final_cycle);
    CsvWriter csv("cycle,node_id,T_at_reference_K,max_T_K,min_T_K");
    for (const auto& row : qs.summary)
        csv.row(row.cycle, row.node_id, fmt_double(row.t_at_reference), fmt_double(row.max_t),
                fmt_double(row.min_t));
    write_file(ctx.out_dir / "orbit_summary.csv", csv.os.str());
    write_manifest(ctx);
    std::cout << "quasi-stationary after " << qs.cycles << " cycles (max delta "
              << qs.last_delta << " K)" << (qs.converged ? "" : " -- NOT converged") << "\n";
    return qs.converged ? 0 : 1;
}

inline int cmd_sweep(RunContext& ctx, const std::string& param,
                     const std::vector<double>& values, const std::vector<std::string>& select,
                     const std::string& method) {
    nlohmann::json base = nlohmann::json::parse(ctx.model_text);
    nlohmann::json::json_pointer ptr;
    try {
        ptr = nlohmann::json::json_pointer{param};
    } catch (const nlohmann::json::exception&) {
        throw ModelError("sweep: invalid parameter path '" + param + "'");
    }

    std::vector<std::pair<double, std::vector<std::pair<std::string, double>>>> rows;
    for (double v : values) {
        nlohmann::json patched = base;
        try {
            patched[ptr] = v;
        } catch (const nlohmann::json::exception&) {
            throw ModelError("sweep: invalid parameter path '" + param + "'");
        }
        Model model = parse_model(patched.dump());
        ensure_rad_couplings(model, ctx.seed, ctx.threads);
        const Network net(model);
        SolveOptions opt;
        opt.method = method == "iterative" ? SolveMethod::iterative : SolveMethod::newton;
        const SteadyResult res = opt.method == SolveMethod::iterative
                                     ? solve_steady_iterative(net, {}, opt)
                                     : solve_steady_newton(net, {}, opt);

        const std::filesystem::path sub = ctx.out_dir / ("value_" + fmt_double(v));
        std::filesystem::create_directories(sub);
        CsvWriter csv("node_id,temperature_K");
        std::vector<std::pair<std::string, double>> picked;
        for (int i = 0; i < net.node_count(); ++i) {
            csv.row(model.nodes[i].id, fmt_double(res.temperatures[i]));
            if (select.empty() ||
                std::find(select.begin(), select.end(), model.nodes[i].id) != select.end())
                picked.emplace_back(model.nodes[i].id, res.temperatures[i]);
        }
        write_file(sub / "steady.csv", csv.os.str());
        rows.emplace_back(v, std::move(picked));
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    CsvWriter csv("value,node_id,temperature_K");
    for (const auto& [v, picked] : rows)
        for (const auto& [id, T] : picked) csv.row(fmt_double(v), id, fmt_double(T));
    write_file(ctx.out_dir / "sweep_summary.csv", csv.os.str());
    write_manifest(ctx);
    std::cout << "swept " << values.size() << " values of " << param << "\n";
    return 0;
}

inline int run(std::vector<std::string> args) {
    CLI::App app{"thermnet: lumped-parameter spacecraft thermal network simulator"};
    app.require_subcommand(1);

    std::string model_path;
    std::string out_dir = "out";
    std::uint64_t seed = default_seed;
    int threads = env_threads();
    app.add_option("--model,-m", model_path, "model file (JSON)")->required();
    app.add_option("--out,-o", out_dir, "output directory");
    app.add_option("--seed", seed, "master random seed");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");

    auto* radk = app.add_subcommand("radk", "Monte Carlo radiative exchange factors");
    std::int64_t rays = 10000;
    radk->add_option("--rays", rays, "default rays per emitting face");

    auto* steady = app.add_subcommand("solve-steady", "steady-state temperatures");
    std::string steady_method = "newton";
    steady->add_option("--method", steady_method, "newton|iterative")
        ->check(CLI::IsMember({"newton", "iterative"}));

    auto* transient = app.add_subcommand("solve-transient", "transient integration");
    std::string tr_method = "bdf";
    double t_end = 0.0, dt0 = 0.0, output_every = 0.0, until_rate = 0.0;
    transient->add_option("--method", tr_method, "cn|bdf")->check(CLI::IsMember({"cn", "bdf"}));
    transient->add_option("--t-end", t_end, "end time [s]")->required();
    transient->add_option("--dt0", dt0, "initial step [s]");
    transient->add_option("--output-every", output_every, "output sampling interval [s]");
    transient->add_option("--until-rate", until_rate, "stop when max |dT/dt| < rate [K/s]");

    auto* transfer = app.add_subcommand("transfer", "frequency-domain gain analysis");
    std::string input_spec;
    double fmin = 1e-6, fmax = 1e-1;
    int points = 61;
    transfer->add_option("--input", input_spec, "boundary:<node> or power:<node>")->required();
    transfer->add_option("--fmin", fmin, "lowest frequency [Hz]");
    transfer->add_option("--fmax", fmax, "highest frequency [Hz]");
    transfer->add_option("--points", points, "frequency count");

    auto* heatflow = app.add_subcommand("heatflow", "steady-state heat-flow report");
    std::vector<std::string> chain;
    heatflow->add_option("--groups", chain, "ordered group chain")->delimiter(',');

    auto* orbitc = app.add_subcommand("orbit", "orbital scenarios");
    std::string scenario = "l2";
    int cycles_max = 30;
    double orbit_tol = 0.1, orbit_t_end = 0.0, orbit_output_every = 0.0;
    std::string orbit_method = "bdf";
    orbitc->add_option("--scenario", scenario, "l2|heo")->check(CLI::IsMember({"l2", "heo"}));
    orbitc->add_option("--cycles-max", cycles_max, "max orbital cycles (heo)");
    orbitc->add_option("--tol", orbit_tol, "cycle recurrence tolerance [K] (heo)");
    orbitc->add_option("--t-end", orbit_t_end, "cool-down duration [s] (l2)");
    orbitc->add_option("--output-every", orbit_output_every, "output sampling interval [s]");
    orbitc->add_option("--method", orbit_method, "cn|bdf")->check(CLI::IsMember({"cn", "bdf"}));

    auto* sweep = app.add_subcommand("sweep", "steady-state parameter sweep");
    std::string param;
    std::vector<double> values;
    std::vector<std::string> select;
    std::string sweep_method = "newton";
    sweep->add_option("--param", param, "JSON pointer into the model file")->required();
    sweep->add_option("--values", values, "values to sweep")->required()->delimiter(',');
    sweep->add_option("--select", select, "node ids for the summary")->delimiter(',');
    sweep->add_option("--method", sweep_method, "newton|iterative")
        ->check(CLI::IsMember({"newton", "iterative"}));

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunContext ctx;
        ctx.model_path = model_path;
        ctx.model_text = read_file(model_path);  // before creating any outputs
        ctx.seed = seed;
        ctx.threads = threads;

        Model model = parse_model(ctx.model_text);

        CLI::App* sub = app.get_subcommands().front();
        ctx.command = sub->get_name();
        ctx.out_dir = out_dir;
        std::filesystem::create_directories(ctx.out_dir);
        for (const CLI::Option* o : sub->get_options())
            if (o->count() > 0) ctx.options[o->get_name()] = o->as<std::string>();

        if (sub == radk) return cmd_radk(ctx, model, rays);
        if (sub == steady) return cmd_solve_steady(ctx, model, steady_method);
        if (sub == transient)
            return cmd_solve_transient(ctx, model, tr_method, t_end, dt0, output_every,
                                       until_rate);
        if (sub == transfer) return cmd_transfer(ctx, model, input_spec, fmin, fmax, points);
        if (sub == heatflow) return cmd_heatflow(ctx, model, chain);
        if (sub == orbitc)
            return cmd_orbit(ctx, model, scenario, cycles_max, orbit_tol, orbit_t_end,
                             orbit_output_every, orbit_method);
        if (sub == sweep) return cmd_sweep(ctx, param, values, select, sweep_method);
        std::cerr << "unknown subcommand\n";
        return 2;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SolveError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace cli
}  // namespace thermnet
