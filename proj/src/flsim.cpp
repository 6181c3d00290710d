#include "greenfl/flsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "greenfl/errors.hpp"
#include "greenfl/network.hpp"
#include "greenfl/quantize.hpp"

namespace greenfl {

namespace {

Rng stream(uint64_t seed, uint64_t a, uint64_t b) {
    std::seed_seq seq{uint32_t(seed), uint32_t(seed >> 32), uint32_t(a), uint32_t(a >> 32), uint32_t(b), uint32_t(b >> 32)};
    return Rng(seq);
}

constexpr uint64_t kSelectStream = 0xFFFFFFFFULL;
constexpr uint64_t kProbeStream = 0x50524F42ULL;

double norm_sq(std::span<const double> v) noexcept {
    double s = 0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

Dataset make_synthetic(const SyntheticTask& task, uint64_t seed) {
    if (task.features < 1 || task.classes < 2 || task.samples < 1) throw ConfigError("invalid synthetic task size", "sim.task");
    if (!(task.separation >= 0) || !(task.noise >= 0)) throw ConfigError("invalid synthetic task scale", "sim.task");
    Dataset d;
    d.features = task.features;
    d.classes = task.classes;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double f = task.features;
    std::vector<double> means(std::size_t(task.classes) * task.features);
    for (double& v : means) v = normal(rng) * task.separation / std::sqrt(f);
    std::uniform_int_distribution<int> label(0, task.classes - 1);
    d.x.resize(std::size_t(task.samples) * task.features);
    d.y.resize(task.samples);
    for (int i = 0; i < task.samples; ++i) {
        const int c = label(rng);
        d.y[i] = c;
        for (int j = 0; j < task.features; ++j) {
            d.x[std::size_t(i) * task.features + j] = means[std::size_t(c) * task.features + j] + normal(rng) * task.noise / std::sqrt(f);
        }
    }
    return d;
}

SoftmaxObjective::SoftmaxObjective(const Dataset& data, std::vector<std::size_t> indices, double mu)
    : data_(&data), idx_(std::move(indices)), mu_(mu) {
    if (idx_.empty()) throw std::invalid_argument("SoftmaxObjective: empty sample set");
}

SoftmaxObjective::SoftmaxObjective(const Dataset& data, double mu) : data_(&data), mu_(mu) {
    idx_.resize(data.size());
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    if (idx_.empty()) throw std::invalid_argument("SoftmaxObjective: empty dataset");
}

double SoftmaxObjective::accumulate(std::span<const double> w, std::span<const std::size_t> rows,
                                    std::span<double> out) const {
    const int F = data_->features, C = data_->classes;
    const bool want_grad = !out.empty();
    if (want_grad) std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> z(C);
    double total = 0;
    for (std::size_t r : rows) {
        const auto x = data_->row(r);
        const int y = data_->y[r];
        double zmax = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < C; ++c) {
            const double* wc = w.data() + std::size_t(c) * F;
            double s = 0;
            for (int j = 0; j < F; ++j) s += wc[j] * x[j];
            z[c] = s;
            zmax = std::max(zmax, s);
        }
        double denom = 0;
        for (int c = 0; c < C; ++c) {
            z[c] = std::exp(z[c] - zmax);
            denom += z[c];
        }
        total += std::log(denom) - std::log(z[y]);
        if (want_grad) {
            for (int c = 0; c < C; ++c) {
                const double coef = z[c] / denom - (c == y ? 1.0 : 0.0);
                double* gc = out.data() + std::size_t(c) * F;
                for (int j = 0; j < F; ++j) gc[j] += coef * x[j];
            }
        }
    }
    const double inv = 1.0 / double(rows.size());
    if (want_grad) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * inv + mu_ * w[i];
    }
    return total * inv + 0.5 * mu_ * norm_sq(w);
}

double SoftmaxObjective::loss(std::span<const double> w) const { return accumulate(w, idx_, {}); }

double SoftmaxObjective::gradient(std::span<const double> w, std::span<double> out) const {
    return accumulate(w, idx_, out);
}

void SoftmaxObjective::batch_gradient(std::span<const double> w, std::span<const std::size_t> batch,
                                      std::span<double> out) const {
    std::vector<std::size_t> rows(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) rows[i] = idx_[batch[i]];
    accumulate(w, rows, out);
}

std::vector<std::vector<std::size_t>> partition_dirichlet(const Dataset& data, int num_devices, double alpha,
                                                          uint64_t seed) {
    if (num_devices < 1) throw ConfigError("number of devices must be >= 1", "network.N");
    if (!(alpha > 0)) throw ConfigError("Dirichlet alpha must be positive", "sim.dirichlet_alpha");
    if (std::size_t(num_devices) > data.size()) throw ConfigError("more devices than samples", "sim.task.samples");

    std::vector<std::vector<std::size_t>> by_class(data.classes);
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data.y[i]].push_back(i);

    Rng rng(seed);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<std::vector<std::size_t>> parts;
    for (int attempt = 0; attempt < 100; ++attempt) {
        parts.assign(num_devices, {});
        for (auto& cls : by_class) {
            std::shuffle(cls.begin(), cls.end(), rng);
            std::vector<double> q(num_devices);
            double total = 0;
            while (!(total > 0)) {
                total = 0;
                for (double& v : q) total += (v = gamma(rng));
            }
            std::size_t start = 0;
            double acc = 0;
            for (int k = 0; k < num_devices; ++k) {
                acc += q[k] / total;
                const std::size_t end = k + 1 == num_devices ? cls.size() : std::min(cls.size(), std::size_t(std::llround(acc * cls.size())));
                for (std::size_t i = start; i < end; ++i) parts[k].push_back(cls[i]);
                start = std::max(start, end);
            }
        }
        if (std::none_of(parts.begin(), parts.end(), [](const auto& p) { return p.empty(); })) break;
    }
    // extreme skew can leave devices empty after every redraw; take from the largest
    for (auto& p : parts) {
        if (!p.empty()) continue;
        auto& donor = *std::max_element(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
        p.push_back(donor.back());
        donor.pop_back();
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

std::vector<LinkSpec> deploy_network(int num_devices, double area_m, double pathloss_exp, uint64_t seed,
                                     double bandwidth_hz, double tx_power_w, double noise_psd_w_per_hz) {
    return link_specs(deploy_uniform(num_devices, area_m, pathloss_exp, seed), bandwidth_hz, tx_power_w,
                      noise_psd_w_per_hz);
}

EstimatedConstants estimate_constants(const Dataset& data, const std::vector<Device>& devices,
                                      const ProbeOptions& opts, uint64_t seed) {
    if (devices.empty()) throw std::invalid_argument("estimate_constants: no devices");
    const std::size_t dim = data.model_dim();
    EstimatedConstants est;
    double total_samples = 0;
    for (const auto& dev : devices) total_samples += double(dev.samples.size());

    std::vector<double> w_avg(dim, 0.0);
    std::vector<double> g(dim), full(dim);
    std::vector<std::size_t> batch(opts.batch_size);
    std::vector<SoftmaxObjective> locals;
    for (const auto& dev : devices) {
        locals.emplace_back(data, dev.samples, opts.mu);
        const auto& obj = locals.back();
        Rng rng = stream(seed, uint64_t(dev.id), kProbeStream);
        std::uniform_int_distribution<std::size_t> pick(0, obj.size() - 1);
        std::vector<double> w(dim, 0.0);
        double g_sq = 0, dev_sq = 0;
        for (int it = 0; it < opts.iterations; ++it) {
            for (auto& b : batch) b = pick(rng);
            obj.batch_gradient(w, batch, g);
            obj.gradient(w, full);
            g_sq += norm_sq(g);
            double dsq = 0;
            for (std::size_t i = 0; i < dim; ++i) dsq += (g[i] - full[i]) * (g[i] - full[i]);
            dev_sq += dsq;
            for (std::size_t i = 0; i < dim; ++i) w[i] -= opts.learning_rate * g[i];
            clip_unit_inplace(w);
        }
        est.G_k.push_back(std::sqrt(g_sq / opts.iterations));
        est.sigma.push_back(std::sqrt(dev_sq / opts.iterations));
        const double share = double(dev.samples.size()) / total_samples;
        for (std::size_t i = 0; i < dim; ++i) w_avg[i] += share * w[i];
    }
    est.G = *std::max_element(est.G_k.begin(), est.G_k.end());
    for (std::size_t k = 0; k < devices.size(); ++k) {
        est.Gamma += double(devices[k].samples.size()) / total_samples * locals[k].loss(w_avg);
    }
    const bool tiny_sigma = std::all_of(est.sigma.begin(), est.sigma.end(), [](double s) { return s < 1e-12; });
    est.degenerate = est.G < 1e-12 || tiny_sigma;
    return est;
}

SimOracle reference_optimum(const Dataset& data, double mu, int budget) {
    const SoftmaxObjective obj(data, mu);
    const std::size_t dim = data.model_dim();
    double max_row = 0;
    for (std::size_t i = 0; i < data.size(); ++i) max_row = std::max(max_row, norm_sq(data.row(i)));
    const double step = 1.0 / (0.5 * max_row + mu);

    std::vector<double> x(dim, 0.0), x_prev = x, yv = x, grad(dim);
    SimOracle best;
    best.w_star = x;
    best.f_star = obj.loss(x);
    double t = 1.0, f_prev = best.f_star;
    for (int it = 1; it <= budget; ++it) {
        obj.gradient(yv, grad);
        x_prev = x;
        for (std::size_t i = 0; i < dim; ++i) x[i] = std::clamp(yv[i] - step * grad[i], -1.0, 1.0);
        const double f = obj.loss(x);
        if (f < best.f_star) {
            best.f_star = f;
            best.w_star = x;
        }
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (f > f_prev) {
            // adaptive restart
            t = 1.0;
            t_next = 1.0;
            x = best.w_star;
            yv = x;
        } else {
            for (std::size_t i = 0; i < dim; ++i) yv[i] = x[i] + (t - 1.0) / t_next * (x[i] - x_prev[i]);
        }
        f_prev = std::min(f, f_prev);
        t = t_next;
        best.iterations = it;
    }
    return best;
}

SimTrace run_federated(const ControlVector& ctrl, const Dataset& data, const std::vector<Device>& devices,
                       const SimOptions& opts, const SimOracle& oracle, uint64_t seed) {
    if (ctrl.I < 1 || ctrl.K < 1) throw ConfigError("I and K must be >= 1", "ctrl");
    if (devices.empty()) throw ConfigError("no devices", "network.N");
    if (!opts.with_replacement && ctrl.K > int(devices.size())) throw ConfigError("K exceeds N", "ctrl");
    if (opts.batch_size < 1) throw ConfigError("batch size must be >= 1", "sim.batch_size");
    const QuantGrid grid_n(ctrl.n), grid_m(ctrl.m);

    const std::size_t dim = data.model_dim();
    const SoftmaxObjective global(data, opts.mu);
    std::vector<SoftmaxObjective> locals;
    std::vector<double> probs, uplink;
    for (const auto& dev : devices) {
        locals.emplace_back(data, dev.samples, opts.mu);
        probs.push_back(dev.p);
        uplink.push_back(uplink_energy(ctrl.m, opts.arch, dev.link));
    }
    const double e_iter = local_iteration_energy(ctrl.n, opts.chip, opts.arch);

    SimTrace trace;
    trace.ctrl = ctrl;
    trace.seed = seed;
    std::vector<double> w(dim, 0.0), aggregate(dim), wl(dim), g(dim);
    trace.initial_loss = global.loss(w);
    std::vector<std::size_t> batch(opts.batch_size);
    double cumulative = 0, window_sum = 0;

    for (int r = 1; r <= opts.max_rounds; ++r) {
        Rng select = stream(seed, uint64_t(r), kSelectStream);
        std::vector<int> selected;
        if (opts.with_replacement) {
            std::discrete_distribution<int> draw(probs.begin(), probs.end());
            for (int s = 0; s < ctrl.K; ++s) selected.push_back(draw(select));
        } else {
            std::vector<double> remaining = probs;
            for (int s = 0; s < ctrl.K; ++s) {
                std::discrete_distribution<int> draw(remaining.begin(), remaining.end());
                const int k = draw(select);
                selected.push_back(k);
                remaining[k] = 0.0;
            }
        }

        std::fill(aggregate.begin(), aggregate.end(), 0.0);
        double round_energy = 0;
        for (int s = 0; s < ctrl.K; ++s) {
            const int k = selected[s];
            const auto& obj = locals[k];
            Rng rng = stream(seed, uint64_t(r), uint64_t(s));
            std::uniform_int_distribution<std::size_t> pick(0, obj.size() - 1);
            wl = w;
            for (int i = 0; i < ctrl.I; ++i) {
                const double t = double(r - 1) * ctrl.I + i;
                const double eta = std::min(opts.beta / (t + opts.gamma), 1.0 / opts.rho);
                const auto wq = quantize_vector(wl, grid_n, rng);
                for (auto& b : batch) b = pick(rng);
                obj.batch_gradient(wq, batch, g);
                for (std::size_t j = 0; j < dim; ++j) wl[j] -= eta * g[j];
                clip_unit_inplace(wl);
            }
            for (std::size_t j = 0; j < dim; ++j) wl[j] -= w[j];
            const NormalizedUpdate u = normalize_update(wl);
            const auto q = quantize_vector(u.direction, grid_m, rng);
            for (std::size_t j = 0; j < dim; ++j) aggregate[j] += u.scale * q[j];
            round_energy += uplink[k] + ctrl.I * e_iter;
        }
        for (std::size_t j = 0; j < dim; ++j) w[j] += aggregate[j] / ctrl.K;
        clip_unit_inplace(w);

        cumulative += round_energy;
        RoundRecord rec;
        rec.round = r;
        rec.loss = global.loss(w);
        rec.gap = rec.loss - oracle.f_star;
        rec.round_energy = round_energy;
        rec.cumulative_energy = cumulative;
        rec.selected = std::move(selected);
        trace.rounds.push_back(std::move(rec));
        const auto& last = trace.rounds.back();

        if (!std::isfinite(last.loss) || last.loss > opts.divergence_factor * trace.initial_loss) {
            trace.diverged = true;
            break;
        }
        window_sum += last.gap;
        if (r > opts.smooth_window) window_sum -= trace.rounds[r - 1 - opts.smooth_window].gap;
        if (!trace.rounds_to_eps && r >= opts.smooth_window && window_sum / opts.smooth_window <= opts.target_eps) {
            trace.rounds_to_eps = r;
            trace.energy_to_eps = cumulative;
            if (opts.stop_at_eps) break;
        }
    }
    trace.total_energy = cumulative;
    if (!trace.rounds_to_eps) trace.energy_to_eps = cumulative;
    trace.final_weights = std::move(w);
    return trace;
}

std::string trace_csv(const SimTrace& trace, const std::string& config_hash) {
    std::string out = "round,loss,gap,round_energy_j,cumulative_energy_j,selected_ids,config_hash,seed\n";
    for (const auto& r : trace.rounds) {
        std::string ids;
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
            if (i) ids += ';';
            ids += std::to_string(r.selected[i]);
        }
        out += fmt::format("{},{:.12g},{:.12g},{:.12g},{:.12g},{},{},{}\n", r.round, r.loss, r.gap, r.round_energy,
                           r.cumulative_energy, ids, config_hash, trace.seed);
    }
    return out;
}

std::string trace_json(const SimTrace& trace, const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["seed"] = trace.seed;
    j["ctrl"] = {{"I", trace.ctrl.I}, {"K", trace.ctrl.K}, {"m", trace.ctrl.m}, {"n", trace.ctrl.n}};
    j["rounds_to_eps"] = trace.rounds_to_eps ? nlohmann::ordered_json(*trace.rounds_to_eps) : nlohmann::ordered_json();
    j["energy_to_eps"] = trace.energy_to_eps;
    j["total_energy"] = trace.total_energy;
    j["rounds_run"] = trace.rounds.size();
    j["initial_loss"] = trace.initial_loss;
    j["final_loss"] = trace.rounds.empty() ? trace.initial_loss : trace.rounds.back().loss;
    j["diverged"] = trace.diverged;
    return j.dump(2) + "\n";
}

}  // namespace greenfl
