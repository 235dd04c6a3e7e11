#include "evospring/controller.hpp"

#include "evospring/simulator.hpp"

#include <cmath>

namespace evospring {

int sensor_count(int mass_count) {
    return 10 + 4 * mass_count;
}

void cpg_signals(const CpgBank& bank, int step, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(bank.n));
    for (int i = 0; i < bank.n; ++i)
        out[static_cast<std::size_t>(i)] = std::sin(bank.omega * step + bank.phase(i));
}

std::vector<double> sense(const SimState& state, const Morphology& morphology,
                          const SimState& initial_state) {
    const int n_masses = morphology.mass_count();
    std::vector<double> sensors(static_cast<std::size_t>(sensor_count(n_masses)));

    const CpgBank bank;
    std::vector<double> cpg;
    cpg_signals(bank, state.step, cpg);
    for (int i = 0; i < bank.n; ++i) sensors[static_cast<std::size_t>(i)] = cpg[static_cast<std::size_t>(i)];

    Vec2 com{0, 0}, com0{0, 0};
    for (int i = 0; i < n_masses; ++i) {
        com += state.positions[static_cast<std::size_t>(i)];
        com0 += initial_state.positions[static_cast<std::size_t>(i)];
    }
    com *= 1.0 / n_masses;
    com0 *= 1.0 / n_masses;

    for (int i = 0; i < n_masses; ++i) {
        const std::size_t base = static_cast<std::size_t>(10 + 4 * i);
        const Vec2& v = state.velocities[static_cast<std::size_t>(i)];
        const Vec2 rel = state.positions[static_cast<std::size_t>(i)] - com;
        const Vec2 rel0 = initial_state.positions[static_cast<std::size_t>(i)] - com0;
        sensors[base + 0] = v.x;
        sensors[base + 1] = v.y;
        sensors[base + 2] = rel.x - rel0.x;
        sensors[base + 3] = rel.y - rel0.y;
    }
    return sensors;
}

std::vector<double> forward(const ControllerParams& params, const std::vector<double>& sensors) {
    std::vector<double> hidden(static_cast<std::size_t>(params.n_hidden));
    for (int h = 0; h < params.n_hidden; ++h) {
        double z = params.b1[static_cast<std::size_t>(h)];
        const double* row = params.w1.data() + static_cast<std::size_t>(h) * params.n_in;
        for (int k = 0; k < params.n_in; ++k) z += row[k] * sensors[static_cast<std::size_t>(k)];
        hidden[static_cast<std::size_t>(h)] = std::tanh(z);
    }
    std::vector<double> out(static_cast<std::size_t>(params.n_out));
    for (int o = 0; o < params.n_out; ++o) {
        double z = params.b2[static_cast<std::size_t>(o)];
        const double* row = params.w2.data() + static_cast<std::size_t>(o) * params.n_hidden;
        for (int h = 0; h < params.n_hidden; ++h) z += row[h] * hidden[static_cast<std::size_t>(h)];
        out[static_cast<std::size_t>(o)] = std::tanh(z);
    }
    return out;
}

ControllerParams init_params(Rng& rng, int n_in, int n_active, double gain) {
    ControllerParams params;
    params.n_in = n_in;
    params.n_out = n_active;
    params.w1.resize(static_cast<std::size_t>(params.n_hidden) * n_in);
    params.b1.assign(static_cast<std::size_t>(params.n_hidden), 0.0);
    params.w2.resize(static_cast<std::size_t>(n_active) * params.n_hidden);
    params.b2.assign(static_cast<std::size_t>(n_active), 0.0);

    const double sd1 = gain * std::sqrt(2.0 / (n_in + params.n_hidden));
    for (auto& w : params.w1) w = sd1 * rng.normal();
    const double sd2 = gain * std::sqrt(2.0 / (params.n_hidden + n_active));
    for (auto& w : params.w2) w = sd2 * rng.normal();
    return params;
}

} // namespace evospring
