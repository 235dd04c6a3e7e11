#include "evospring/simulator.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace evospring {

namespace {

constexpr double kDegenerateLength = 1e-9;
// Impacts slower than this resolve at the current position (time of impact 0)
// instead of dividing by a near-zero approach rate; chattering quasi-static
// contacts would otherwise blow up the reverse pass through 1/v terms.
constexpr double kVelEps = 1e-4;
constexpr double kDenomEps = 1e-4;

bool finite(const Vec2& v) {
    return std::isfinite(v.x) && std::isfinite(v.y);
}

// Target rest length of one spring under actuation a in [-1, 1].
double target_rest_length(const MorphSpring& spring, double a, const SimConfig& config) {
    if (!spring.active) return spring.rest_length;
    return spring.rest_length * (1.0 + config.act_amplitude * a);
}

// End-of-step state of one mass against flat ground at y = 0. Returns the
// branch record consumed by the reverse pass.
detail::ContactFwd contact_flat(Vec2& position, Vec2& velocity, double dt) {
    detail::ContactFwd c;
    const double proposed_y = position.y + dt * velocity.y;
    if (proposed_y <= 0.0 && velocity.y <= 0.0) {
        c.contacted = true;
        if (velocity.y < -kVelEps) {
            c.toi_raw = -position.y / velocity.y;
            c.toi = std::min(std::max(c.toi_raw, 0.0), dt);
            c.toi_free = (c.toi == c.toi_raw);
        }
        position += c.toi * velocity;
        velocity = Vec2{0, 0};
    } else {
        position += dt * velocity;
    }
    return c;
}

// End-of-step state of one mass against rugged terrain: time of impact within
// the local segment, min(|v_n|, |v_t|) friction, then a vertical projection
// back onto the surface for motion that crossed into a neighboring segment.
detail::ContactFwd contact_rugged(Vec2& position, Vec2& velocity, const Terrain& terrain,
                                  double dt) {
    detail::ContactFwd c;
    const double slope = terrain.slope_at(position.x);
    const double ground_y = terrain.height(position.x);
    const double phi = position.y - ground_y;
    const Vec2 proposed = position + dt * velocity;
    const double pen = (proposed.y - ground_y) - slope * (proposed.x - position.x);
    const double denom = slope * velocity.x - velocity.y;

    Vec2 raw;
    if (pen <= 0.0 && denom > kDenomEps) {
        c.contacted = true;
        c.slope = slope;
        c.phi = phi;
        c.denom = denom;
        c.toi_raw = phi / denom;
        c.toi = std::min(std::max(c.toi_raw, 0.0), dt);
        c.toi_free = (c.toi == c.toi_raw);
        const Vec2 at_contact = position + c.toi * velocity;

        const double inv = 1.0 / std::sqrt(1.0 + slope * slope);
        c.n = Vec2{-slope * inv, inv};
        c.tau = Vec2{inv, slope * inv};
        c.vn = dot(velocity, c.n);
        c.vt = dot(velocity, c.tau);
        c.friction_from_vn = std::fabs(c.vn) <= std::fabs(c.vt);
        const double f = c.friction_from_vn ? std::fabs(c.vn) : std::fabs(c.vt);
        c.vt_sign = (c.vt > 0.0) ? 1 : (c.vt < 0.0 ? -1 : 0);
        const double vt2 = c.vt - f * c.vt_sign;
        c.vn_zeroed = (c.vn < 0.0);
        const double vn2 = c.vn_zeroed ? 0.0 : c.vn;
        velocity = vt2 * c.tau + vn2 * c.n;
        c.vplus = velocity;
        raw = at_contact + (dt - c.toi) * velocity;
    } else {
        raw = proposed;
    }

    const double floor_y = terrain.height(raw.x);
    c.projected = raw.y < floor_y;
    c.proj_slope = terrain.slope_at(raw.x);
    position = Vec2{raw.x, c.projected ? floor_y : raw.y};
    return c;
}

// Hooke force accumulation shared by the public op and the stepper; scratch
// capture must not change any arithmetic.
bool accumulate_spring_forces(const SimState& state, const Morphology& morphology,
                              std::span<const double> actuations, const SimConfig& config,
                              std::vector<Vec2>& forces,
                              std::vector<detail::SpringFwd>* scratch) {
    assert(static_cast<int>(actuations.size()) == morphology.active_spring_count);
    forces.assign(state.positions.size(), Vec2{0, 0});
    if (scratch) scratch->resize(morphology.springs.size());
    bool ok = true;
    int out_idx = 0;
    for (std::size_t s = 0; s < morphology.springs.size(); ++s) {
        const auto& spring = morphology.springs[s];
        const double a = spring.active ? actuations[static_cast<std::size_t>(out_idx++)] : 0.0;
        detail::SpringFwd fwd;
        fwd.d = state.positions[static_cast<std::size_t>(spring.j)] -
                state.positions[static_cast<std::size_t>(spring.i)];
        fwd.len = fwd.d.norm();
        if (fwd.len < kDegenerateLength) {
            fwd.degenerate = true;
            ok = false; // zero force instead of dividing by zero
            if (scratch) (*scratch)[s] = fwd;
            continue;
        }
        fwd.u = (1.0 / fwd.len) * fwd.d;
        fwd.ell = target_rest_length(spring, a, config);
        const double fmag = config.stiffness * (fwd.len - fwd.ell);
        const Vec2 f = (fmag / fwd.len) * fwd.d;
        forces[static_cast<std::size_t>(spring.i)] += f;
        forces[static_cast<std::size_t>(spring.j)] -= f;
        if (scratch) (*scratch)[s] = fwd;
    }
    return ok;
}

} // namespace

bool spring_forces(const SimState& state, const Morphology& morphology,
                   std::span<const double> actuations, const SimConfig& config,
                   std::vector<Vec2>& forces) {
    return accumulate_spring_forces(state, morphology, actuations, config, forces, nullptr);
}

void resolve_contact_flat(Vec2& position, Vec2& velocity, double dt) {
    contact_flat(position, velocity, dt);
}

void resolve_contact_rugged(Vec2& position, Vec2& velocity, const Terrain& terrain, double dt) {
    contact_rugged(position, velocity, terrain, dt);
}

SimState make_initial_state(const Morphology& morphology, const Terrain& terrain) {
    SimState state;
    state.positions = morphology.masses;
    state.velocities.assign(morphology.masses.size(), Vec2{0, 0});
    state.step = 0;
    double lift = 0.0;
    for (const auto& p : state.positions)
        lift = std::max(lift, terrain.height(p.x) - p.y);
    if (lift > 0.0)
        for (auto& p : state.positions) p.y += lift;
    return state;
}

Vec2 center_of_mass(const SimState& state) {
    Vec2 com{0, 0};
    for (const auto& p : state.positions) com += p;
    return com * (1.0 / static_cast<double>(state.positions.size()));
}

namespace detail {

namespace {

// Physics half of a step: forces, damped velocity update, contact, position
// update.
bool physics_step(const SimState& state, const Morphology& morphology,
                  std::span<const double> actuations, const Terrain& terrain,
                  const SimConfig& config, FrictionMode mode, SimState& next,
                  StepScratch* scratch) {
    const int n_masses = morphology.mass_count();
    const double dt = config.dt;
    const double decay = std::exp(-dt * config.damping);

    static thread_local std::vector<Vec2> force_buffer;
    std::vector<Vec2>& forces = scratch ? scratch->forces : force_buffer;
    bool ok = accumulate_spring_forces(state, morphology, actuations, config, forces,
                                       scratch ? &scratch->springs : nullptr);

    if (scratch) {
        scratch->vprime.resize(static_cast<std::size_t>(n_masses));
        scratch->contact.resize(static_cast<std::size_t>(n_masses));
    }
    next.positions.resize(static_cast<std::size_t>(n_masses));
    next.velocities.resize(static_cast<std::size_t>(n_masses));
    next.step = state.step + 1;

    for (int i = 0; i < n_masses; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const Vec2 acc = (1.0 / config.mass) * forces[ui] + Vec2{0.0, -config.gravity};
        const Vec2 vprime = decay * (state.velocities[ui] + dt * acc);
        if (scratch) scratch->vprime[ui] = vprime;

        Vec2 p = state.positions[ui];
        Vec2 v = vprime;
        const ContactFwd c = (mode == FrictionMode::NoSlip)
                                 ? contact_flat(p, v, dt)
                                 : contact_rugged(p, v, terrain, dt);
        next.positions[ui] = p;
        next.velocities[ui] = v;
        if (scratch) scratch->contact[ui] = c;
        if (!finite(p) || !finite(v)) ok = false;
    }
    return ok;
}

} // namespace

bool step_once(const SimState& state, const Morphology& morphology,
               const ControllerParams& params, const Terrain& terrain, const SimConfig& config,
               FrictionMode mode, const SimState& initial_state, SimState& next,
               StepScratch* scratch) {
    static thread_local std::vector<double> sensor_buffer;
    static thread_local std::vector<double> act_buffer;

    std::vector<double>& sensors = scratch ? scratch->sensors : sensor_buffer;
    sensors = sense(state, morphology, initial_state);

    std::vector<double>& act = scratch ? scratch->act : act_buffer;
    if (scratch) {
        // keep hidden activations for the reverse pass
        scratch->hidden.resize(static_cast<std::size_t>(params.n_hidden));
        for (int h = 0; h < params.n_hidden; ++h) {
            double z = params.b1[static_cast<std::size_t>(h)];
            const double* row = params.w1.data() + static_cast<std::size_t>(h) * params.n_in;
            for (int k = 0; k < params.n_in; ++k) z += row[k] * sensors[static_cast<std::size_t>(k)];
            scratch->hidden[static_cast<std::size_t>(h)] = std::tanh(z);
        }
        act.resize(static_cast<std::size_t>(params.n_out));
        for (int o = 0; o < params.n_out; ++o) {
            double z = params.b2[static_cast<std::size_t>(o)];
            const double* row = params.w2.data() + static_cast<std::size_t>(o) * params.n_hidden;
            for (int h = 0; h < params.n_hidden; ++h)
                z += row[h] * scratch->hidden[static_cast<std::size_t>(h)];
            act[static_cast<std::size_t>(o)] = std::tanh(z);
        }
    } else {
        act = forward(params, sensors);
    }

    return physics_step(state, morphology, act, terrain, config, mode, next, scratch);
}

} // namespace detail

SimState integrate_step(const SimState& state, const Morphology& morphology,
                        std::span<const double> actuations, const Terrain& terrain,
                        const SimConfig& config, FrictionMode mode, bool& unstable) {
    SimState next;
    if (!detail::physics_step(state, morphology, actuations, terrain, config, mode, next, nullptr))
        unstable = true;
    return next;
}

RolloutResult rollout(const Morphology& morphology, const ControllerParams& params,
                      const Terrain& terrain, const SimConfig& config, FrictionMode mode,
                      BranchTrace* branch_trace) {
    RolloutResult result;
    const SimState initial = make_initial_state(morphology, terrain);
    SimState state = initial;
    result.com_trace.reserve(static_cast<std::size_t>(config.steps) + 1);
    result.com_trace.push_back(center_of_mass(state));

    detail::StepScratch scratch;
    detail::StepScratch* scratch_ptr = branch_trace ? &scratch : nullptr;
    if (branch_trace) {
        branch_trace->clear();
        branch_trace->reserve(static_cast<std::size_t>(config.steps) * morphology.mass_count());
    }

    bool degenerate_seen = false;
    SimState next;
    for (int t = 0; t < config.steps; ++t) {
        const bool ok = detail::step_once(state, morphology, params, terrain, config, mode,
                                          initial, next, scratch_ptr);
        if (branch_trace) {
            for (const auto& c : scratch.contact) {
                const std::uint8_t packed =
                    static_cast<std::uint8_t>((c.contacted ? 1 : 0) | (c.toi_free ? 2 : 0) |
                                              (c.friction_from_vn ? 4 : 0) |
                                              ((c.vt_sign + 1) << 3) | (c.vn_zeroed ? 32 : 0) |
                                              (c.projected ? 64 : 0));
                branch_trace->push_back(packed);
            }
        }
        std::swap(state, next);
        bool any_nonfinite = false;
        for (std::size_t i = 0; i < state.positions.size(); ++i) {
            if (!finite(state.positions[i]) || !finite(state.velocities[i])) {
                any_nonfinite = true;
                break;
            }
        }
        if (!ok && !any_nonfinite) degenerate_seen = true;
        if (any_nonfinite) {
            result.unstable = true;
            result.loss = std::numeric_limits<double>::quiet_NaN();
            result.final_state = state;
            return result;
        }
        result.com_trace.push_back(center_of_mass(state));
    }

    result.final_state = state;
    if (degenerate_seen) {
        result.unstable = true;
        result.loss = std::numeric_limits<double>::quiet_NaN();
    } else {
        result.loss = -(result.com_trace.back().x - result.com_trace.front().x);
    }
    return result;
}

} // namespace evospring
