#include "greenfl/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace greenfl {

void ChipSpec::validate() const {
    if (!(mac_energy_j > 0)) throw std::invalid_argument("chip.A_joules must be positive");
    if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("chip.alpha must lie in (1, 2)");
    if (!(dram_factor > 1.0)) throw std::invalid_argument("chip.A_d must exceed 1");
    if (mac_units <= 0) throw std::invalid_argument("chip.p_macs must be positive");
    const auto root = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(mac_units))));
    if (root * root != mac_units) throw std::invalid_argument("chip.p_macs must be a square number");
    if (!(sram_bits > 0)) throw std::invalid_argument("chip.sram_bytes must be positive");
}

void ModelArch::validate() const {
    if (!(params > 0 && macs > 0 && outputs > 0 && input_dim > 0)) {
        throw std::invalid_argument("arch counts must be positive");
    }
    if (n_max < 2 || m_max < 2) throw std::invalid_argument("arch.n_max and arch.m_max must be >= 2");
}

void LinkSpec::validate() const {
    if (!(bandwidth_hz > 0 && tx_power_w > 0 && avg_gain > 0 && noise_psd_w_per_hz > 0)) {
        throw std::invalid_argument("link parameters must be strictly positive");
    }
}

double dbm_per_hz_to_w_per_hz(double dbm) noexcept { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double mac_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept {
    return chip.mac_energy_j * std::pow(bits / arch.n_max, chip.alpha);
}

InferenceEnergy inference_breakdown(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept {
    const double e_mac = mac_energy(bits, chip, arch);
    const double e_mac_full = mac_energy(arch.n_max, chip, arch);
    const double e_main = 2.0 * e_mac;
    // local-buffer reuse across a sqrt(p) x sqrt(p) array, with bits/n_max packing
    const double reuse = std::sqrt(bits / (static_cast<double>(chip.mac_units) * arch.n_max));
    const double overflow = std::max(arch.params * bits + arch.outputs * bits - chip.sram_bits, 0.0);

    InferenceEnergy e;
    e.compute = e_mac * arch.macs + 2.0 * arch.outputs * e_mac_full;
    e.weights = e_main * arch.params + e_mac * arch.macs * reuse;
    e.activations = 2.0 * e_main * arch.outputs + e_mac * arch.macs * reuse;
    e.dram = chip.dram_factor * e_mac_full * arch.input_dim + 2.0 * chip.dram_factor * e_mac * overflow;
    return e;
}

double inference_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept {
    return inference_breakdown(bits, chip, arch).total();
}

double backprop_energy(const ChipSpec& chip, const ModelArch& arch) noexcept {
    const double nmax = arch.n_max;
    const double e_mac = mac_energy(nmax, chip, arch);
    const double e_main = 2.0 * e_mac;
    const double e_dram = chip.dram_factor * e_mac;
    const double overflow = std::max(arch.params * nmax + arch.outputs * nmax - chip.sram_bits, 0.0);
    return 2.0 * arch.macs * e_mac + 2.0 * e_main * arch.outputs + e_main * arch.params +
           2.0 * e_mac * arch.macs * std::sqrt(1.0 / static_cast<double>(chip.mac_units)) + 2.0 * e_dram * overflow;
}

double local_iteration_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept {
    return inference_energy(bits, chip, arch) + backprop_energy(chip, arch);
}

double uplink_rate(const LinkSpec& link) noexcept {
    const double snr = link.tx_power_w * link.avg_gain / (link.noise_psd_w_per_hz * link.bandwidth_hz);
    return link.bandwidth_hz * std::log2(1.0 + snr);
}

double uplink_energy(double m_bits, const ModelArch& arch, const LinkSpec& link) noexcept {
    return link.tx_power_w * arch.params * m_bits / uplink_rate(link);
}

}  // namespace greenfl
