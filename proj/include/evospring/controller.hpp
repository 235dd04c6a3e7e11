#pragma once

#include "evospring/lattice.hpp"
#include "evospring/rng.hpp"

#include <vector>

namespace evospring {

struct SimState; // simulator.hpp

// Ten phase-shifted sine waves at a fixed angular frequency per time step,
// giving the controller a shared clock for coordinating actuation.
struct CpgBank {
    int n = 10;
    double omega = 0.08 * 3.141592653589793238;

    double phase(int i) const { return 2.0 * 3.141592653589793238 * i / n; }
};

// out[i] = sin(omega * step + 2*pi*i/n); period is 25 steps at the default omega.
void cpg_signals(const CpgBank& bank, int step, std::vector<double>& out);

// CPG channels followed by four proprioceptors per mass: horizontal and
// vertical velocity, then horizontal and vertical displacement relative to the
// center of mass and the initial state. Length is 10 + 4 * mass count.
std::vector<double> sense(const SimState& state, const Morphology& morphology,
                          const SimState& initial_state);

// Three-layer MLP: tanh hidden layer of 32 units, tanh outputs in (-1, 1).
struct ControllerParams {
    int n_in = 0;
    int n_hidden = 32;
    int n_out = 0;
    std::vector<double> w1; // n_hidden x n_in, row-major
    std::vector<double> b1; // n_hidden
    std::vector<double> w2; // n_out x n_hidden, row-major
    std::vector<double> b2; // n_out

    std::size_t parameter_count() const {
        return w1.size() + b1.size() + w2.size() + b2.size();
    }

    friend bool operator==(const ControllerParams&, const ControllerParams&) = default;
};

std::vector<double> forward(const ControllerParams& params, const std::vector<double>& sensors);

// Weights ~ Normal(0, gain^2 * 2 / (fan_in + fan_out)), biases zero.
ControllerParams init_params(Rng& rng, int n_in, int n_active, double gain);

int sensor_count(int mass_count);

} // namespace evospring
