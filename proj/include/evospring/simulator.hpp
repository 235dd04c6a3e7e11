#pragma once

#include "evospring/controller.hpp"
#include "evospring/geometry.hpp"
#include "evospring/lattice.hpp"
#include "evospring/terrain.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace evospring {

struct SimConfig {
    double dt = 0.004;
    int steps = 1000;
    double stiffness = 3000.0;
    double gravity = 4.8; // downward
    double damping = 30.0;
    double act_amplitude = 0.1; // active rest lengths vary +-10%
    double mass = 1.0;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// NoSlip: time-of-impact against y = 0, then both velocity components zeroed.
// MinNormTangent: time of impact against the local terrain segment, friction
// equal to min(|v_n|, |v_t|) subtracted from the tangent component.
enum class FrictionMode { NoSlip, MinNormTangent };

struct SimState {
    std::vector<Vec2> positions;
    std::vector<Vec2> velocities;
    int step = 0;
};

struct RolloutResult {
    double loss = 0.0;            // -(final CoM_x - initial CoM_x); NaN when unstable
    std::vector<Vec2> com_trace;  // steps + 1 entries when the rollout is stable
    SimState final_state;
    bool unstable = false;
};

// Hooke forces with actuated rest lengths; accumulated per mass. Returns false
// (and raises no force) when a spring is degenerate, |p_j - p_i| < 1e-9.
bool spring_forces(const SimState& state, const Morphology& morphology,
                   std::span<const double> actuations, const SimConfig& config,
                   std::vector<Vec2>& forces);

// End-of-step (position, velocity) of a mass against flat ground at y = 0.
void resolve_contact_flat(Vec2& position, Vec2& velocity, double dt);

// End-of-step (position, velocity) of a mass against rugged terrain.
void resolve_contact_rugged(Vec2& position, Vec2& velocity, const Terrain& terrain, double dt);

// Semi-implicit Euler with exponential velocity damping and per-mass contact
// resolution. Degenerate springs and non-finite values set `unstable`.
SimState integrate_step(const SimState& state, const Morphology& morphology,
                        std::span<const double> actuations, const Terrain& terrain,
                        const SimConfig& config, FrictionMode mode, bool& unstable);

// Start-of-rollout state: morphology positions lifted just enough that no mass
// starts below the terrain, zero velocities.
SimState make_initial_state(const Morphology& morphology, const Terrain& terrain);

Vec2 center_of_mass(const SimState& state);

// Per-mass packed contact flags for every step: bit0 contacted, bit1 toi in
// the open interval, bit2 friction from the normal component, bits3-4 tangent
// sign + 1, bit5 normal zeroed, bit6 position projected. Gradient checks use
// this to guard finite differences against branch flips.
using BranchTrace = std::vector<std::uint8_t>; // steps * mass_count entries

// Full closed-loop rollout: sense, evaluate the controller, integrate; stops
// early with loss = NaN when the state turns non-finite.
RolloutResult rollout(const Morphology& morphology, const ControllerParams& params,
                      const Terrain& terrain, const SimConfig& config, FrictionMode mode,
                      BranchTrace* branch_trace = nullptr);

namespace detail {

// Everything the reverse pass needs about one forward step, recomputed from
// the stored (positions, velocities) so branch decisions are bitwise frozen.
struct SpringFwd {
    Vec2 d;          // p_j - p_i
    double len = 0.0;
    Vec2 u;          // d / len
    double ell = 0.0; // target rest length
    bool degenerate = false;
};

struct ContactFwd {
    bool contacted = false;
    bool toi_free = false;  // time of impact inside (0, dt), not clamped
    double toi = 0.0;
    double toi_raw = 0.0;
    // rugged-only fields
    double slope = 0.0;
    double phi = 0.0;
    double denom = 0.0;
    Vec2 n, tau;
    double vn = 0.0, vt = 0.0;
    bool friction_from_vn = false;
    int vt_sign = 0;
    bool vn_zeroed = false;
    bool projected = false;
    double proj_slope = 0.0;
    Vec2 vplus;
};

struct StepScratch {
    std::vector<double> sensors;
    std::vector<double> hidden;
    std::vector<double> act;
    std::vector<SpringFwd> springs;
    std::vector<Vec2> forces;
    std::vector<Vec2> vprime;
    std::vector<ContactFwd> contact;
};

// One controller+physics step; identical arithmetic whether or not scratch is
// requested. Returns false when the step went unstable.
bool step_once(const SimState& state, const Morphology& morphology,
               const ControllerParams& params, const Terrain& terrain, const SimConfig& config,
               FrictionMode mode, const SimState& initial_state, SimState& next,
               StepScratch* scratch);

} // namespace detail

} // namespace evospring
