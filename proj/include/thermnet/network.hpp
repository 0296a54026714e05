#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "thermnet/linalg.hpp"
#include "thermnet/model.hpp"

namespace thermnet {

// Signed radiative power from i to j [W]:  GR * sigma * (Ti^4 - Tj^4)
inline double radiative_flow(double gr, double t_i, double t_j, double sigma) {
    const double ti2 = t_i * t_i;
    const double tj2 = t_j * t_j;
    return gr * sigma * (ti2 * ti2 - tj2 * tj2);
}

// Signed conductive power from i to j [W]:  GL * (Ti - Tj)
inline double conductive_flow(double gl, double t_i, double t_j) { return gl * (t_i - t_j); }

// Environmental loads per node [W], produced by the orbit module.
struct EnvNodeLoads {
    std::vector<double> solar;      // direct solar
    std::vector<double> planetary;  // albedo + planetary IR
};

// Indexed, solver-ready view of a validated model. Face-level radiative
// couplings are summed into node-level couplings; shield plates and similar
// surfaces are near-isothermal, so faces bind rigidly to their nodes.
class Network {
  public:
    struct RadPair {
        int a = 0;
        int b = 0;       // node indices; may be a boundary (incl. space)
        double gr = 0.0; // [m^2]
    };
    struct CondRef {
        int a = 0;
        int b = 0;
        const Conductor* c = nullptr;
    };

    explicit Network(const Model& model) : model_(&model) {
        const int n = static_cast<int>(model.nodes.size());
        for (int i = 0; i < n; ++i) {
            index_[model.nodes[i].id] = i;
            if (model.nodes[i].kind != NodeKind::boundary) unknowns_.push_back(i);
            if (model.nodes[i].kind == NodeKind::arithmetic) arithmetic_.push_back(i);
            if (model.nodes[i].kind == NodeKind::diffusion) diffusion_.push_back(i);
        }
        for (int u = 0; u < static_cast<int>(unknowns_.size()); ++u)
            unknown_of_node_[unknowns_[u]] = u;

        std::map<std::string, std::string> face_node;
        for (const auto& f : model.faces) face_node[f.id] = f.node;
        auto resolve = [&](const std::string& id) -> int {
            if (auto fit = face_node.find(id); fit != face_node.end())
                return index_.at(fit->second);
            return index_.at(id);
        };

        if (model.rad_couplings) {
            std::map<std::pair<int, int>, double> acc;
            for (const auto& e : model.rad_couplings->entries) {
                const int a = resolve(e.a);
                const int b = resolve(e.b);
                if (a == b) continue;  // same-node exchange is internally isothermal
                auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
                acc[key] += e.gr;
            }
            for (const auto& [key, gr] : acc)
                if (gr > 0.0) rad_.push_back({key.first, key.second, gr});
        }
        for (const auto& c : model.conductors)
            cond_.push_back({index_.at(c.node_a), index_.at(c.node_b), &c});
        loads_by_node_.resize(n);
        for (const auto& l : model.loads) loads_by_node_[index_.at(l.node)].push_back(&l);

        rad_adj_.resize(n);
        cond_adj_.resize(n);
        for (const auto& rp : rad_) {
            rad_adj_[rp.a].push_back({rp.b, rp.gr});
            rad_adj_[rp.b].push_back({rp.a, rp.gr});
        }
        for (const auto& cd : cond_) {
            cond_adj_[cd.a].push_back({cd.b, cd.c});
            cond_adj_[cd.b].push_back({cd.a, cd.c});
        }
    }

    const Model& model() const { return *model_; }
    int node_count() const { return static_cast<int>(model_->nodes.size()); }
    const std::vector<int>& unknowns() const { return unknowns_; }
    const std::vector<int>& arithmetic_nodes() const { return arithmetic_; }
    const std::vector<int>& diffusion_nodes() const { return diffusion_; }
    const std::vector<RadPair>& rad_pairs() const { return rad_; }
    const std::vector<CondRef>& conductors() const { return cond_; }
    int node_index(const std::string& id) const { return index_.at(id); }
    bool has_node(const std::string& id) const { return index_.count(id) > 0; }
    int unknown_index(int node) const {
        auto it = unknown_of_node_.find(node);
        return it == unknown_of_node_.end() ? -1 : it->second;
    }

    // Initial full-length state: node temperatures from the model.
    std::vector<double> initial_state() const {
        std::vector<double> T(node_count());
        for (int i = 0; i < node_count(); ++i) T[i] = model_->nodes[i].temperature;
        return T;
    }

    double dissipation_at(int node, double t) const {
        double q = 0.0;
        for (const HeatLoad* l : loads_by_node_[node]) q += l->power_at(t);
        return q;
    }

    // Left-hand side of the energy balance for every node: the net incoming
    // power from radiation, conduction, dissipation and environmental fluxes.
    // Boundary rows are evaluated but never constrained.
    std::vector<double> residual(const std::vector<double>& T, double t,
                                 const EnvNodeLoads* env = nullptr) const {
        const int n = node_count();
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(T[i]))
                throw ModelError("non-finite temperature at node '" + model_->nodes[i].id + "'");
        std::vector<double> r(n, 0.0);
        const double sigma = model_->constants.sigma;
        for (const auto& rp : rad_) {
            const double q = radiative_flow(rp.gr, T[rp.a], T[rp.b], sigma);
            r[rp.a] -= q;
            r[rp.b] += q;
        }
        for (const auto& cd : cond_) {
            const double gl = conductor_GL(*model_, *cd.c, 0.5 * (T[cd.a] + T[cd.b]));
            const double q = conductive_flow(gl, T[cd.a], T[cd.b]);
            r[cd.a] -= q;
            r[cd.b] += q;
        }
        for (int i = 0; i < n; ++i) r[i] += dissipation_at(i, t);
        if (env) {
            for (int i = 0; i < n; ++i) {
                if (!env->solar.empty()) r[i] += env->solar[i];
                if (!env->planetary.empty()) r[i] += env->planetary[i];
            }
        }
        return r;
    }

    // d(residual)/dT over all nodes (analytic).
    Matrix<double> full_jacobian(const std::vector<double>& T) const {
        const int n = node_count();
        Matrix<double> J(n, n, 0.0);
        const double sigma = model_->constants.sigma;
        for (const auto& rp : rad_) {
            const double da = 4.0 * sigma * rp.gr * T[rp.a] * T[rp.a] * T[rp.a];
            const double db = 4.0 * sigma * rp.gr * T[rp.b] * T[rp.b] * T[rp.b];
            J(rp.a, rp.a) -= da;
            J(rp.a, rp.b) += db;
            J(rp.b, rp.b) -= db;
            J(rp.b, rp.a) += da;
        }
        for (const auto& cd : cond_) {
            const double tm = 0.5 * (T[cd.a] + T[cd.b]);
            const double gl = conductor_GL(*model_, *cd.c, tm);
            const double dgl = conductor_GL_slope(*model_, *cd.c, tm);
            const double dT = T[cd.a] - T[cd.b];
            // d/dTa [-gl(tm) dT] = -gl - 0.5 dgl dT ; d/dTb [...] = gl - 0.5 dgl dT
            J(cd.a, cd.a) += -gl - 0.5 * dgl * dT;
            J(cd.a, cd.b) += gl - 0.5 * dgl * dT;
            J(cd.b, cd.b) += -gl + 0.5 * dgl * dT;
            J(cd.b, cd.a) += gl + 0.5 * dgl * dT;
        }
        return J;
    }

    // Node i's balance and its derivative wrt its own temperature, using only
    // i's couplings (the Gauss-Seidel inner solve).
    std::pair<double, double> node_residual_and_diag(int i, const std::vector<double>& T, double t,
                                                     const EnvNodeLoads* env = nullptr) const {
        const double sigma = model_->constants.sigma;
        double r = dissipation_at(i, t);
        double diag = 0.0;
        for (const auto& [j, gr] : rad_adj_[i]) {
            r += radiative_flow(gr, T[j], T[i], sigma);
            diag -= 4.0 * sigma * gr * T[i] * T[i] * T[i];
        }
        for (const auto& [j, c] : cond_adj_[i]) {
            const double tm = 0.5 * (T[i] + T[j]);
            const double gl = conductor_GL(*model_, *c, tm);
            const double dgl = conductor_GL_slope(*model_, *c, tm);
            r += gl * (T[j] - T[i]);
            diag += -gl + 0.5 * dgl * (T[j] - T[i]);
        }
        if (env) {
            if (!env->solar.empty()) r += env->solar[i];
            if (!env->planetary.empty()) r += env->planetary[i];
        }
        return {r, diag};
    }

    // Jacobian restricted to unknown rows/columns.
    Matrix<double> jacobian(const std::vector<double>& T) const {
        const Matrix<double> J = full_jacobian(T);
        const int m = static_cast<int>(unknowns_.size());
        Matrix<double> Ju(m, m, 0.0);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) Ju(r, c) = J(unknowns_[r], unknowns_[c]);
        return Ju;
    }

  private:
    const Model* model_;
    std::map<std::string, int> index_;
    std::map<int, int> unknown_of_node_;
    std::vector<int> unknowns_;
    std::vector<int> arithmetic_;
    std::vector<int> diffusion_;
    std::vector<RadPair> rad_;
    std::vector<CondRef> cond_;
    std::vector<std::vector<const HeatLoad*>> loads_by_node_;
    std::vector<std::vector<std::pair<int, double>>> rad_adj_;
    std::vector<std::vector<std::pair<int, const Conductor*>>> cond_adj_;
};

enum class FlowKind { radiative, conductive, dissipation, solar, planetary };

inline const char* flow_kind_name(FlowKind k) {
    switch (k) {
        case FlowKind::radiative: return "radiative";
        case FlowKind::conductive: return "conductive";
        case FlowKind::dissipation: return "dissipation";
        case FlowKind::solar: return "solar";
        case FlowKind::planetary: return "planetary";
    }
    return "";
}

struct FlowReport {
    struct Flow {
        std::string from;  // source label for dissipation/solar/planetary rows
        std::string to;
        FlowKind kind = FlowKind::conductive;
        double watts = 0.0;  // signed, from -> to
    };
    std::vector<Flow> flows;
    std::map<std::string, double> node_residual;            // net per-node [W]
    std::map<std::pair<std::string, std::string>, double> group_flow;  // net a -> b
    std::vector<double> chain_flows;  // along the requested ordered group list
};

// Per-coupling flows at state T plus group-level aggregation. `chain` is an
// ordered group list whose consecutive net flows are extracted (the path
// attenuation view).
inline FlowReport heat_flow_report(const Network& net, const std::vector<double>& T, double t,
                                   const std::vector<std::string>& chain = {},
                                   const EnvNodeLoads* env = nullptr) {
    const Model& model = net.model();
    FlowReport rep;
    const double sigma = model.constants.sigma;

    std::set<std::string> known_groups;
    for (const auto& n : model.nodes)
        if (!n.group.empty()) known_groups.insert(n.group);
    for (const auto& g : chain)
        if (!known_groups.count(g)) throw ModelError("unknown group '" + g + "'");

    auto group_of = [&](int node) -> const std::string& { return model.nodes[node].group; };
    auto add_group_flow = [&](int a, int b, double q) {
        const std::string& ga = group_of(a);
        const std::string& gb = group_of(b);
        if (ga.empty() || gb.empty() || ga == gb) return;
        rep.group_flow[{ga, gb}] += q;
        rep.group_flow[{gb, ga}] -= q;
    };

    for (const auto& rp : net.rad_pairs()) {
        const double q = radiative_flow(rp.gr, T[rp.a], T[rp.b], sigma);
        rep.flows.push_back({model.nodes[rp.a].id, model.nodes[rp.b].id, FlowKind::radiative, q});
        add_group_flow(rp.a, rp.b, q);
    }
    for (const auto& cd : net.conductors()) {
        const double gl = conductor_GL(model, *cd.c, 0.5 * (T[cd.a] + T[cd.b]));
        const double q = conductive_flow(gl, T[cd.a], T[cd.b]);
        rep.flows.push_back({model.nodes[cd.a].id, model.nodes[cd.b].id, FlowKind::conductive, q});
        add_group_flow(cd.a, cd.b, q);
    }
    for (int i = 0; i < net.node_count(); ++i) {
        const double q = net.dissipation_at(i, t);
        if (q != 0.0)
            rep.flows.push_back({"source:dissipation", model.nodes[i].id, FlowKind::dissipation, q});
        if (env) {
            if (!env->solar.empty() && env->solar[i] != 0.0)
                rep.flows.push_back({"source:solar", model.nodes[i].id, FlowKind::solar,
                                     env->solar[i]});
            if (!env->planetary.empty() && env->planetary[i] != 0.0)
                rep.flows.push_back({"source:planetary", model.nodes[i].id, FlowKind::planetary,
                                     env->planetary[i]});
        }
    }
    const std::vector<double> r = net.residual(T, t, env);
    for (int i = 0; i < net.node_count(); ++i) rep.node_residual[model.nodes[i].id] = r[i];

    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
        auto it = rep.group_flow.find({chain[k], chain[k + 1]});
        rep.chain_flows.push_back(it == rep.group_flow.end() ? 0.0 : it->second);
    }
    return rep;
}

}  // namespace thermnet
