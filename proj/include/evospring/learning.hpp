#pragma once

#include "evospring/controller.hpp"
#include "evospring/lattice.hpp"
#include "evospring/rng.hpp"
#include "evospring/simulator.hpp"
#include "evospring/terrain.hpp"

#include <vector>

namespace evospring {

// d(loss)/d(parameter), shape-congruent with ControllerParams.
struct GradientVector {
    std::vector<double> w1, b1, w2, b2;

    double squared_norm() const;
    bool finite() const;
};

struct LearnConfig {
    int iterations = 35;
    double lr_constant = 0.05; // step size: lr_constant / ||grad|| per update
    double lr_eps = 1e-6;
    double max_lr = 10.0; // guards the zero-gradient limit
    double xavier_gain = 0.1; // keeps tanh units unsaturated at desk scale
    int checkpoint_every = 0; // reverse-pass state storage; 0 keeps every step

    friend bool operator==(const LearnConfig&, const LearnConfig&) = default;
};

struct GradientResult {
    double loss = 0.0;
    GradientVector grads;
    bool unstable = false; // gradient undefined; caller marks the iteration invalid
};

// Reverse-mode derivative of the implemented discrete dynamics. Contact
// branches are differentiated as taken in the forward pass. checkpoint_every
// trades reverse-pass memory for recomputation; results are identical.
GradientResult gradient(const Morphology& morphology, const ControllerParams& params,
                        const Terrain& terrain, const SimConfig& config, FrictionMode mode,
                        int checkpoint_every = 0);

// Adjoint seed over the final rollout state. gradient() is the instance seeded
// with the loss; tests seed arbitrary linear probes through the same engine.
struct AdjointSeed {
    std::vector<Vec2> dpos;
    std::vector<Vec2> dvel;
};

GradientResult rollout_adjoint(const Morphology& morphology, const ControllerParams& params,
                               const Terrain& terrain, const SimConfig& config, FrictionMode mode,
                               int checkpoint_every, const AdjointSeed& seed);

// lr = min(c / (sqrt(sum g^2) + eps), max_lr)
double learning_rate(const GradientVector& grads, double c, double eps, double max_lr);

struct TrainResult {
    std::vector<double> losses;     // one per iteration; NaN once unstable
    std::vector<double> lrs;        // learning rate applied after each iteration
    std::vector<double> grad_norms; // ||grad|| at each iteration
    double fitness = 0.0;           // best displacement across iterations
    double initial_performance = 0.0;
    ControllerParams best_params;   // params that produced the best iteration
    bool valid = false;             // all losses finite
};

// Xavier init, then `iterations` rounds of rollout-gradient descent with the
// normalized step rule. rng only seeds the initial parameters; everything else
// is deterministic.
TrainResult train(const Morphology& morphology, const Terrain& terrain, const SimConfig& sim,
                  const LearnConfig& learn, FrictionMode mode, Rng& rng);

} // namespace evospring
