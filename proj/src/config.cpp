#include "greenfl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "greenfl/errors.hpp"
#include "greenfl/network.hpp"

namespace greenfl {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Reads one JSON object, remembers which keys were consumed, rejects the rest.
class Section {
public:
    Section(const json& parent, const std::string& key, std::string prefix) : path_(prefix.empty() ? key : prefix + "." + key) {
        if (!parent.contains(key)) {
            obj_ = &empty_;
            return;
        }
        obj_ = &parent.at(key);
        if (!obj_->is_object()) throw ConfigError(fmt::format("'{}' must be an object", path_), path_);
    }
    explicit Section(const json& root) : obj_(&root), path_() {
        if (!root.is_object()) throw ConfigError("config root must be an object");
    }

    [[nodiscard]] std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] const json& node() const { return *obj_; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_->find(key);
        return it == obj_->end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(fmt::format("'{}' must be a number", key_path(key)), key_path(key));
            out = v->get<double>();
        }
    }
    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(fmt::format("'{}' must be an integer", key_path(key)), key_path(key));
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned() || v->get<int64_t>() >= 0) {
                    out = v->get<Int>();
                    return;
                }
                throw ConfigError(fmt::format("'{}' must be >= 0", key_path(key)), key_path(key));
            } else {
                out = v->get<Int>();
            }
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(fmt::format("'{}' must be true or false", key_path(key)), key_path(key));
            out = v->get<bool>();
        }
    }
    template <typename T>
    void list(const std::string& key, std::vector<T>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(fmt::format("'{}' must be an array", key_path(key)), key_path(key));
            std::vector<T> tmp;
            for (const auto& e : *v) {
                const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
                if (!ok) throw ConfigError(fmt::format("'{}' has a non-numeric entry", key_path(key)), key_path(key));
                tmp.push_back(e.get<T>());
            }
            out = std::move(tmp);
        }
    }
    void estimable(const std::string& key, Estimable& out) {
        if (const json* v = find(key)) {
            if (v->is_string() && v->get<std::string>() == "estimate") {
                out.estimate = true;
            } else if (v->is_number()) {
                out = {false, v->get<double>()};
            } else {
                throw ConfigError(fmt::format("'{}' must be a number or \"estimate\"", key_path(key)), key_path(key));
            }
        }
    }

    void finish() const {
        for (const auto& [k, _] : obj_->items()) {
            if (!seen_.count(k)) throw ConfigError(fmt::format("unknown key '{}'", key_path(k)), key_path(k));
        }
    }

private:
    static inline const json empty_ = json::object();
    const json* obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(fmt::format("'{}' {}", key, msg), key);
}

void validate(const RunConfig& c) {
    try {
        c.chip.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), "chip");
    }
    try {
        c.arch.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), "arch");
    }
    const auto& n = c.network;
    require(n.N >= 1, "network.N", "must be >= 1");
    require(n.area_m > 0, "network.area_m", "must be positive");
    require(n.pathloss_exp > 0, "network.pathloss_exp", "must be positive");
    require(n.bandwidth_hz > 0, "network.bandwidth_hz", "must be positive");
    require(n.tx_power_w > 0, "network.tx_power_w", "must be positive");
    require(std::isfinite(n.noise_dbm_per_hz), "network.noise_dbm_per_hz", "must be finite");

    const auto& v = c.convergence;
    require(!v.sigma.empty(), "convergence.sigma", "must not be empty");
    require(v.sigma.size() == 1 || int(v.sigma.size()) == n.N, "convergence.sigma", "must have 1 or N entries");
    for (double s : v.sigma) require(s >= 0 && std::isfinite(s), "convergence.sigma", "entries must be >= 0");
    require(v.G.estimate || v.G.value > 0, "convergence.G", "must be positive");
    require(v.Gamma.estimate || v.Gamma.value >= 0, "convergence.Gamma", "must be >= 0");

    const auto& b = c.bounds;
    require(b.I_min >= 1, "bounds.I_min", "must be >= 1");
    require(b.I_max >= b.I_min, "bounds.I_max", "must be >= I_min");
    require(b.K_min >= 1 && b.K_min <= n.N, "bounds.K_min", "must lie in [1, N]");
    if (b.K_max) require(*b.K_max >= b.K_min && *b.K_max <= n.N, "bounds.K_max", "must lie in [K_min, N]");
    for (int m : b.m_levels) require(m >= 2 && m <= c.arch.m_max, "bounds.m_levels", "entries must lie in [2, m_max]");
    for (int x : b.n_levels) require(x >= 2 && x <= c.arch.n_max, "bounds.n_levels", "entries must lie in [2, n_max]");

    const auto& s = c.sweep;
    require(s.zeta_steps >= 2, "sweep.zeta_steps", "must be >= 2");
    require(!s.lambdas.empty(), "sweep.lambdas", "must not be empty");
    for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
        require(s.lambdas[i] > 0 && (i == 0 || s.lambdas[i] > s.lambdas[i - 1]), "sweep.lambdas", "must be positive and increasing");
    }
    require(s.starts >= 0, "sweep.starts", "must be >= 0");
    require(s.eps_uto > 0, "sweep.eps_uto", "must be positive");
    require(s.eps_out > 0, "sweep.eps_out", "must be positive");
    require(s.box_tol > 0, "sweep.box_tol", "must be positive");

    const auto& m = c.sim;
    require(m.task.features >= 1, "sim.features", "must be >= 1");
    require(m.task.classes >= 2, "sim.classes", "must be >= 2");
    require(m.task.samples >= n.N, "sim.samples", "must be >= network.N");
    require(m.task.separation >= 0, "sim.separation", "must be >= 0");
    require(m.task.noise >= 0, "sim.noise", "must be >= 0");
    require(m.dirichlet_alpha > 0, "sim.dirichlet_alpha", "must be positive");
    require(m.batch_size >= 1, "sim.batch_size", "must be >= 1");
    require(m.max_rounds >= 1, "sim.max_rounds", "must be >= 1");
    require(m.target_eps > 0, "sim.target_eps", "must be positive");
    require(m.smooth_window >= 1, "sim.smooth_window", "must be >= 1");
    require(m.reference_budget >= 1, "sim.reference_budget", "must be >= 1");
    require(m.probe_iters >= 1, "sim.probe_iters", "must be >= 1");
    require(m.probe_lr > 0, "sim.probe_lr", "must be positive");
    for (double e : c.eps_list) require(e > 0, "eps_list", "entries must be positive");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("malformed JSON: {}", e.what()));
    }
    RunConfig c;
    Section top(root);

    {
        Section s(root, "chip", "");
        top.find("chip");
        s.number("A_joules", c.chip.mac_energy_j);
        s.number("alpha", c.chip.alpha);
        s.number("A_d", c.chip.dram_factor);
        s.integer("p_macs", c.chip.mac_units);
        double bytes = c.chip.sram_bits / 8.0;
        s.number("sram_bytes", bytes);
        c.chip.sram_bits = bytes * 8.0;
        s.finish();
    }
    {
        Section s(root, "arch", "");
        top.find("arch");
        s.number("d", c.arch.params);
        s.number("N_c", c.arch.macs);
        s.number("O_c", c.arch.outputs);
        s.number("x_in", c.arch.input_dim);
        s.integer("n_max", c.arch.n_max);
        s.integer("m_max", c.arch.m_max);
        s.finish();
    }
    {
        Section s(root, "network", "");
        top.find("network");
        auto& n = c.network;
        s.integer("N", n.N);
        s.number("area_m", n.area_m);
        s.number("pathloss_exp", n.pathloss_exp);
        s.number("bandwidth_hz", n.bandwidth_hz);
        s.number("tx_power_w", n.tx_power_w);
        s.number("noise_dbm_per_hz", n.noise_dbm_per_hz);
        s.integer("seed", n.seed);
        s.finish();
    }
    {
        Section s(root, "convergence", "");
        top.find("convergence");
        auto& v = c.convergence;
        s.number("L", v.L);
        s.number("mu", v.mu);
        v.beta = 2.0 / v.mu;
        s.number("beta", v.beta);
        s.number("gamma", v.gamma);
        s.number("rho", v.rho);
        s.number("epsilon", v.epsilon);
        s.estimable("G", v.G);
        s.estimable("Gamma", v.Gamma);
        if (const json* sig = s.find("sigma")) {
            if (sig->is_string() && sig->get<std::string>() == "estimate") {
                v.sigma_estimate = true;
            } else if (sig->is_number()) {
                v.sigma = {sig->get<double>()};
            } else if (sig->is_array()) {
                s.list("sigma", v.sigma);
            } else {
                throw ConfigError("'convergence.sigma' must be a number, an array or \"estimate\"", "convergence.sigma");
            }
        }
        s.finish();
    }
    {
        Section s(root, "bounds", "");
        top.find("bounds");
        auto& b = c.bounds;
        s.integer("I_min", b.I_min);
        s.integer("I_max", b.I_max);
        s.integer("K_min", b.K_min);
        if (const json* k = s.find("K_max"); k && !k->is_null()) {
            if (!k->is_number_integer()) throw ConfigError("'bounds.K_max' must be an integer or null", "bounds.K_max");
            b.K_max = k->get<int>();
        }
        s.list("m_levels", b.m_levels);
        s.list("n_levels", b.n_levels);
        s.finish();
    }
    {
        Section s(root, "sweep", "");
        top.find("sweep");
        auto& w = c.sweep;
        s.integer("zeta_steps", w.zeta_steps);
        s.list("lambdas", w.lambdas);
        s.integer("starts", w.starts);
        s.number("eps_uto", w.eps_uto);
        s.number("eps_out", w.eps_out);
        s.number("box_tol", w.box_tol);
        s.finish();
    }
    {
        Section s(root, "sim", "");
        top.find("sim");
        auto& m = c.sim;
        s.integer("features", m.task.features);
        s.integer("classes", m.task.classes);
        s.integer("samples", m.task.samples);
        s.number("separation", m.task.separation);
        s.number("noise", m.task.noise);
        s.number("dirichlet_alpha", m.dirichlet_alpha);
        s.integer("data_seed", m.data_seed);
        s.integer("batch_size", m.batch_size);
        s.integer("max_rounds", m.max_rounds);
        s.number("target_eps", m.target_eps);
        s.integer("smooth_window", m.smooth_window);
        s.boolean("with_replacement", m.with_replacement);
        s.integer("reference_budget", m.reference_budget);
        s.integer("probe_iters", m.probe_iters);
        s.number("probe_lr", m.probe_lr);
        s.finish();
    }
    top.integer("seed", c.seed);
    top.list("eps_list", c.eps_list);
    top.finish();
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()), "config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const RunConfig& c) {
    ojson j;
    j["chip"] = {{"A_joules", c.chip.mac_energy_j},
                 {"alpha", c.chip.alpha},
                 {"A_d", c.chip.dram_factor},
                 {"p_macs", c.chip.mac_units},
                 {"sram_bytes", c.chip.sram_bits / 8.0}};
    j["arch"] = {{"d", c.arch.params},   {"N_c", c.arch.macs},     {"O_c", c.arch.outputs},
                 {"x_in", c.arch.input_dim}, {"n_max", c.arch.n_max}, {"m_max", c.arch.m_max}};
    const auto& n = c.network;
    j["network"] = {{"N", n.N},
                    {"area_m", n.area_m},
                    {"pathloss_exp", n.pathloss_exp},
                    {"bandwidth_hz", n.bandwidth_hz},
                    {"tx_power_w", n.tx_power_w},
                    {"noise_dbm_per_hz", n.noise_dbm_per_hz},
                    {"seed", n.seed}};
    const auto& v = c.convergence;
    const auto est = [](const Estimable& e) { return e.estimate ? ojson("estimate") : ojson(e.value); };
    ojson sigma = v.sigma_estimate ? ojson("estimate") : (v.sigma.size() == 1 ? ojson(v.sigma[0]) : ojson(v.sigma));
    j["convergence"] = {{"L", v.L},         {"mu", v.mu},           {"beta", v.beta},           {"gamma", v.gamma},
                        {"rho", v.rho},     {"epsilon", v.epsilon}, {"G", est(v.G)},            {"Gamma", est(v.Gamma)},
                        {"sigma", sigma}};
    const auto& b = c.bounds;
    j["bounds"] = {{"I_min", b.I_min},
                   {"I_max", b.I_max},
                   {"K_min", b.K_min},
                   {"K_max", b.K_max ? ojson(*b.K_max) : ojson()},
                   {"m_levels", b.m_levels},
                   {"n_levels", b.n_levels}};
    const auto& w = c.sweep;
    j["sweep"] = {{"zeta_steps", w.zeta_steps}, {"lambdas", w.lambdas}, {"starts", w.starts},
                  {"eps_uto", w.eps_uto},       {"eps_out", w.eps_out}, {"box_tol", w.box_tol}};
    const auto& m = c.sim;
    j["sim"] = {{"features", m.task.features},
                {"classes", m.task.classes},
                {"samples", m.task.samples},
                {"separation", m.task.separation},
                {"noise", m.task.noise},
                {"dirichlet_alpha", m.dirichlet_alpha},
                {"data_seed", m.data_seed},
                {"batch_size", m.batch_size},
                {"max_rounds", m.max_rounds},
                {"target_eps", m.target_eps},
                {"smooth_window", m.smooth_window},
                {"with_replacement", m.with_replacement},
                {"reference_budget", m.reference_budget},
                {"probe_iters", m.probe_iters},
                {"probe_lr", m.probe_lr}};
    j["seed"] = c.seed;
    j["eps_list"] = c.eps_list;
    return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : emit_config(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", tmp.string()));
        out << content;
        out.flush();
        if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

NbiOptions nbi_options(const RunConfig& cfg) {
    NbiOptions o;
    o.lambdas = cfg.sweep.lambdas;
    o.starts = cfg.sweep.starts;
    o.eps_out = cfg.sweep.eps_out;
    o.box.tol = cfg.sweep.box_tol;
    return o;
}

Bounds make_bounds(const RunConfig& cfg) {
    Bounds b;
    b.I_min = cfg.bounds.I_min;
    b.I_max = cfg.bounds.I_max;
    b.K_min = cfg.bounds.K_min;
    b.K_max = cfg.bounds.K_max.value_or(cfg.network.N);
    b.m_min = 2;
    b.m_max = cfg.arch.m_max;
    b.n_min = 2;
    b.n_max = cfg.arch.n_max;
    b.m_levels = cfg.bounds.m_levels;
    b.n_levels = cfg.bounds.n_levels;
    return b;
}

std::vector<LinkSpec> make_links(const RunConfig& cfg) {
    const auto& n = cfg.network;
    return deploy_network(n.N, n.area_m, n.pathloss_exp, n.seed, n.bandwidth_hz, n.tx_power_w,
                          dbm_per_hz_to_w_per_hz(n.noise_dbm_per_hz));
}

SimSetup make_sim_setup(const RunConfig& cfg, const std::vector<LinkSpec>& links) {
    const auto& m = cfg.sim;
    SimSetup s;
    s.data = make_synthetic(m.task, m.data_seed);
    const auto parts = partition_dirichlet(s.data, cfg.network.N, m.dirichlet_alpha, m.data_seed);
    for (int k = 0; k < cfg.network.N; ++k) {
        Device d;
        d.id = k;
        d.samples = parts[k];
        d.p = double(parts[k].size()) / double(s.data.size());
        d.link = links[k];
        s.devices.push_back(std::move(d));
    }
    s.oracle = reference_optimum(s.data, cfg.convergence.mu, m.reference_budget);
    auto& o = s.options;
    o.max_rounds = m.max_rounds;
    o.target_eps = m.target_eps;
    o.smooth_window = m.smooth_window;
    o.batch_size = m.batch_size;
    o.mu = cfg.convergence.mu;
    o.beta = cfg.convergence.beta;
    o.gamma = cfg.convergence.gamma;
    o.rho = cfg.convergence.rho;
    o.with_replacement = m.with_replacement;
    o.chip = cfg.chip;
    o.arch = cfg.arch;
    return s;
}

Scenario make_scenario(const RunConfig& cfg, bool with_sim) {
    Scenario sc;
    sc.cfg = cfg;
    sc.links = make_links(cfg);
    const auto& v = cfg.convergence;
    const bool estimating = v.sigma_estimate || v.G.estimate || v.Gamma.estimate;
    if (with_sim || estimating) sc.sim = make_sim_setup(cfg, sc.links);
    if (estimating) {
        ProbeOptions po;
        po.iterations = cfg.sim.probe_iters;
        po.batch_size = cfg.sim.batch_size;
        po.mu = v.mu;
        po.learning_rate = cfg.sim.probe_lr;
        sc.estimated = estimate_constants(sc.sim->data, sc.sim->devices, po, cfg.seed);
    }

    ConvergenceParams p;
    p.L = v.L;
    p.mu = v.mu;
    p.beta = v.beta;
    p.gamma = v.gamma;
    p.rho = v.rho;
    p.epsilon = v.epsilon;
    p.G = v.G.estimate ? sc.estimated->G : v.G.value;
    p.Gamma = v.Gamma.estimate ? sc.estimated->Gamma : v.Gamma.value;
    if (v.sigma_estimate) {
        p.sigma = sc.estimated->sigma;
    } else if (v.sigma.size() == 1) {
        p.sigma.assign(cfg.network.N, v.sigma[0]);
    } else {
        p.sigma = v.sigma;
    }
    p.probs = optimal_sampling(p.sigma);
    if (sc.sim) {
        for (std::size_t k = 0; k < sc.sim->devices.size(); ++k) {
            sc.sim->devices[k].p = p.probs[k];
            sc.sim->devices[k].sigma = p.sigma[k];
        }
    }
    sc.problem.emplace(std::move(p), cfg.arch, cfg.chip, sc.links, make_bounds(cfg));
    return sc;
}

}  // namespace greenfl
