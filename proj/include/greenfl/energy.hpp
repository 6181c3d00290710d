#ifndef GREENFL_ENERGY_HPP
#define GREENFL_ENERGY_HPP

#include <cstdint>

namespace greenfl {

/// Processing-chip constants. Energies are in joules, sizes in bits.
struct ChipSpec {
    double mac_energy_j = 3.7e-12;  // A: one MAC at full precision
    double alpha = 1.25;            // precision exponent, 1 < alpha < 2
    double dram_factor = 150.0;     // A_d: DRAM access / MAC energy
    int64_t mac_units = 64;         // p: size of the 2-D MAC array (square)
    double sram_bits = 1.6e7;       // S: main SRAM buffer size

    void validate() const;
    bool operator==(const ChipSpec&) const = default;
};

/// Network-size counts used by the energy model.
struct ModelArch {
    double params = 0.41e6;       // d
    double macs = 0.0405e9;       // N_c, MACs per forward pass
    double outputs = 4990;        // O_c, intermediate outputs
    double input_dim = 786;       // x_in
    int n_max = 32;
    int m_max = 32;

    void validate() const;
    bool operator==(const ModelArch&) const = default;
};

/// Uplink parameters of one device.
struct LinkSpec {
    double bandwidth_hz = 1e7;
    double tx_power_w = 0.1;
    double avg_gain = 1.0;              // h_k, dimensionless power gain
    double noise_psd_w_per_hz = 0.0;    // N0

    void validate() const;
    bool operator==(const LinkSpec&) const = default;
};

double dbm_per_hz_to_w_per_hz(double dbm) noexcept;

// MAC / buffer / DRAM access energies at a given precision.
double mac_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept;
inline double main_buffer_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept {
    return 2.0 * mac_energy(bits, chip, arch);
}
inline double dram_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept {
    return chip.dram_factor * mac_energy(bits, chip, arch);
}

/// Breakdown of one forward pass at precision `bits`.
struct InferenceEnergy {
    double compute = 0;
    double weights = 0;
    double activations = 0;
    double dram = 0;
    [[nodiscard]] double total() const noexcept { return compute + weights + activations + dram; }
};

InferenceEnergy inference_breakdown(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept;
double inference_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept;

/// Backward pass, always at full precision n_max.
double backprop_energy(const ChipSpec& chip, const ModelArch& arch) noexcept;

/// One local SGD iteration: forward at `bits` plus full-precision backward.
double local_iteration_energy(double bits, const ChipSpec& chip, const ModelArch& arch) noexcept;

/// Shannon rate B log2(1 + P h / (N0 B)) in bits/s.
double uplink_rate(const LinkSpec& link) noexcept;

/// Energy to upload d parameters at m bits each.
double uplink_energy(double m_bits, const ModelArch& arch, const LinkSpec& link) noexcept;

}  // namespace greenfl

#endif
