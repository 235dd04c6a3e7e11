#include "evospring/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evospring {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool state_finite(const SimState& state) {
    for (const auto& p : state.positions)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    for (const auto& v : state.velocities)
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) return false;
    return true;
}

GradientVector zero_gradients(const ControllerParams& params) {
    GradientVector g;
    g.w1.assign(params.w1.size(), 0.0);
    g.b1.assign(params.b1.size(), 0.0);
    g.w2.assign(params.w2.size(), 0.0);
    g.b2.assign(params.b2.size(), 0.0);
    return g;
}

// Forward state storage for the reverse pass. With checkpoint_every = 0 every
// state is kept; otherwise states at multiples of C are kept and intermediate
// segments are regenerated on demand, bitwise identical to the original pass.
class StateStore {
public:
    StateStore(const Morphology& morph, const ControllerParams& params, const Terrain& terrain,
               const SimConfig& config, FrictionMode mode, int checkpoint_every)
        : morph_(morph), params_(params), terrain_(terrain), config_(config), mode_(mode),
          every_(checkpoint_every) {}

    // Runs the forward rollout. Returns false when the state turns non-finite
    // or a spring degenerates (gradient undefined).
    bool run(const SimState& initial) {
        initial_ = initial;
        SimState state = initial;
        record(0, state);
        SimState next;
        for (int t = 0; t < config_.steps; ++t) {
            if (!detail::step_once(state, morph_, params_, terrain_, config_, mode_, initial_,
                                   next, nullptr))
                return false;
            std::swap(state, next);
            if (!state_finite(state)) return false;
            record(t + 1, state);
        }
        final_state_ = state;
        return true;
    }

    const SimState& initial() const { return initial_; }
    const SimState& final_state() const { return final_state_; }

    const SimState& at(int t) {
        if (every_ <= 0) return stored_[static_cast<std::size_t>(t)];
        const int base = (t / every_) * every_;
        if (cache_base_ != base) refill_cache(base);
        return cache_[static_cast<std::size_t>(t - base)];
    }

private:
    void record(int t, const SimState& state) {
        if (every_ <= 0 || t % every_ == 0) stored_.push_back(state);
    }

    void refill_cache(int base) {
        cache_base_ = base;
        cache_.clear();
        cache_.push_back(stored_[static_cast<std::size_t>(base / every_)]);
        const int last = std::min(base + every_ - 1, config_.steps - 1);
        SimState next;
        for (int t = base; t < last; ++t) {
            detail::step_once(cache_.back(), morph_, params_, terrain_, config_, mode_, initial_,
                              next, nullptr);
            cache_.push_back(next);
        }
    }

    const Morphology& morph_;
    const ControllerParams& params_;
    const Terrain& terrain_;
    const SimConfig& config_;
    FrictionMode mode_;
    int every_;
    SimState initial_;
    SimState final_state_;
    std::vector<SimState> stored_;
    std::vector<SimState> cache_;
    int cache_base_ = -1;
};

int sign_of(double x) {
    return (x > 0.0) ? 1 : (x < 0.0 ? -1 : 0);
}

} // namespace

double GradientVector::squared_norm() const {
    double total = 0.0;
    for (double g : w1) total += g * g;
    for (double g : b1) total += g * g;
    for (double g : w2) total += g * g;
    for (double g : b2) total += g * g;
    return total;
}

bool GradientVector::finite() const {
    for (double g : w1)
        if (!std::isfinite(g)) return false;
    for (double g : b1)
        if (!std::isfinite(g)) return false;
    for (double g : w2)
        if (!std::isfinite(g)) return false;
    for (double g : b2)
        if (!std::isfinite(g)) return false;
    return true;
}

GradientResult rollout_adjoint(const Morphology& morphology, const ControllerParams& params,
                               const Terrain& terrain, const SimConfig& config, FrictionMode mode,
                               int checkpoint_every, const AdjointSeed& seed) {
    GradientResult result;
    result.grads = zero_gradients(params);

    const int n_masses = morphology.mass_count();
    const SimState initial = make_initial_state(morphology, terrain);
    StateStore store(morphology, params, terrain, config, mode, checkpoint_every);
    if (!store.run(initial)) {
        result.unstable = true;
        result.loss = kNan;
        return result;
    }
    result.loss = -(center_of_mass(store.final_state()).x - center_of_mass(initial).x);

    const double dt = config.dt;
    const double decay = std::exp(-dt * config.damping);
    const double vel_scale = decay * dt / config.mass; // adjoint of v' back to forces
    const double inv_m = 1.0 / static_cast<double>(n_masses);
    const bool use_controller = params.n_out > 0;

    std::vector<Vec2> adj_p = seed.dpos;
    std::vector<Vec2> adj_v = seed.dvel;
    adj_p.resize(static_cast<std::size_t>(n_masses), Vec2{0, 0});
    adj_v.resize(static_cast<std::size_t>(n_masses), Vec2{0, 0});

    std::vector<Vec2> adj_p_cur(static_cast<std::size_t>(n_masses));
    std::vector<Vec2> adj_v_cur(static_cast<std::size_t>(n_masses));
    std::vector<Vec2> adj_vprime(static_cast<std::size_t>(n_masses));
    std::vector<double> adj_act(static_cast<std::size_t>(params.n_out));
    std::vector<double> dz2(static_cast<std::size_t>(params.n_out));
    std::vector<double> adj_hidden(static_cast<std::size_t>(params.n_hidden));
    std::vector<double> dz1(static_cast<std::size_t>(params.n_hidden));
    std::vector<double> adj_sensors(static_cast<std::size_t>(params.n_in));

    detail::StepScratch scratch;
    SimState next_unused;

    for (int t = config.steps - 1; t >= 0; --t) {
        const SimState& state = store.at(t);
        detail::step_once(state, morphology, params, terrain, config, mode, initial, next_unused,
                          &scratch);

        std::fill(adj_p_cur.begin(), adj_p_cur.end(), Vec2{0, 0});
        std::fill(adj_v_cur.begin(), adj_v_cur.end(), Vec2{0, 0});
        std::fill(adj_vprime.begin(), adj_vprime.end(), Vec2{0, 0});

        // --- contact and position update ---
        for (int i = 0; i < n_masses; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const Vec2 ap = adj_p[ui];
            const Vec2 av = adj_v[ui];
            const auto& c = scratch.contact[ui];
            const Vec2& vprime = scratch.vprime[ui];

            if (mode == FrictionMode::NoSlip) {
                if (c.contacted) {
                    adj_p_cur[ui] += ap;
                    adj_vprime[ui] += c.toi * ap;
                    if (c.toi_free) {
                        const double adj_toi = dot(ap, vprime);
                        adj_p_cur[ui].y += adj_toi * (-1.0 / vprime.y);
                        adj_vprime[ui].y += adj_toi * (state.positions[ui].y /
                                                       (vprime.y * vprime.y));
                    }
                    // v+ = 0: nothing flows back from av
                } else {
                    adj_p_cur[ui] += ap;
                    adj_vprime[ui] += dt * ap + av;
                }
                continue;
            }

            // MinNormTangent: undo projection, then the contact branch.
            Vec2 adj_raw{ap.x, c.projected ? 0.0 : ap.y};
            if (c.projected) adj_raw.x += c.proj_slope * ap.y;

            if (c.contacted) {
                Vec2 adj_vplus = av + (dt - c.toi) * adj_raw;
                double adj_toi = -dot(c.vplus, adj_raw);

                adj_p_cur[ui] += adj_raw;
                adj_toi += dot(vprime, adj_raw);
                Vec2 adj_vp = c.toi * adj_raw;

                const double adj_vt2 = dot(adj_vplus, c.tau);
                const double adj_vn2 = dot(adj_vplus, c.n);
                double adj_vn = c.vn_zeroed ? 0.0 : adj_vn2;
                double adj_vt = adj_vt2;
                const double adj_f = -static_cast<double>(c.vt_sign) * adj_vt2;
                if (c.friction_from_vn)
                    adj_vn += sign_of(c.vn) * adj_f;
                else
                    adj_vt += sign_of(c.vt) * adj_f;
                adj_vp += adj_vn * c.n + adj_vt * c.tau;

                if (c.toi_free) {
                    const double adj_phi = adj_toi / c.denom;
                    const double adj_denom = -(c.toi_raw / c.denom) * adj_toi;
                    adj_vp.x += c.slope * adj_denom;
                    adj_vp.y -= adj_denom;
                    adj_p_cur[ui].y += adj_phi;
                    adj_p_cur[ui].x -= c.slope * adj_phi;
                }
                adj_vprime[ui] += adj_vp;
            } else {
                adj_p_cur[ui] += adj_raw;
                adj_vprime[ui] += dt * adj_raw + av;
            }
        }

        // --- damped velocity update: v' = decay * (v + dt * (F/m + g)) ---
        std::fill(adj_act.begin(), adj_act.end(), 0.0);
        for (int i = 0; i < n_masses; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            adj_v_cur[ui] += decay * adj_vprime[ui];
        }

        // --- spring forces ---
        int out_idx = 0;
        for (std::size_t s = 0; s < morphology.springs.size(); ++s) {
            const auto& spring = morphology.springs[s];
            const auto& fwd = scratch.springs[s];
            const int out = spring.active ? out_idx++ : -1;
            if (fwd.degenerate) continue; // frozen zero force

            const std::size_t i = static_cast<std::size_t>(spring.i);
            const std::size_t j = static_cast<std::size_t>(spring.j);
            const Vec2 G = vel_scale * (adj_vprime[i] - adj_vprime[j]);
            const double k = config.stiffness;
            const double u_dot_g = dot(fwd.u, G);
            const Vec2 adj_d = k * G - (k * fwd.ell / fwd.len) * (G - u_dot_g * fwd.u);
            adj_p_cur[j] += adj_d;
            adj_p_cur[i] -= adj_d;
            if (out >= 0 && use_controller)
                adj_act[static_cast<std::size_t>(out)] +=
                    -k * u_dot_g * spring.rest_length * config.act_amplitude;
        }

        // --- controller and sensors ---
        if (use_controller) {
            for (int o = 0; o < params.n_out; ++o) {
                const std::size_t uo = static_cast<std::size_t>(o);
                const double a = scratch.act[uo];
                dz2[uo] = adj_act[uo] * (1.0 - a * a);
            }
            std::fill(adj_hidden.begin(), adj_hidden.end(), 0.0);
            for (int o = 0; o < params.n_out; ++o) {
                const std::size_t uo = static_cast<std::size_t>(o);
                const double g = dz2[uo];
                if (g == 0.0) continue;
                double* w2_row = result.grads.w2.data() + uo * params.n_hidden;
                const double* w2p = params.w2.data() + uo * params.n_hidden;
                for (int h = 0; h < params.n_hidden; ++h) {
                    w2_row[h] += g * scratch.hidden[static_cast<std::size_t>(h)];
                    adj_hidden[static_cast<std::size_t>(h)] += w2p[h] * g;
                }
                result.grads.b2[uo] += g;
            }
            std::fill(adj_sensors.begin(), adj_sensors.end(), 0.0);
            for (int h = 0; h < params.n_hidden; ++h) {
                const std::size_t uh = static_cast<std::size_t>(h);
                const double hv = scratch.hidden[uh];
                dz1[uh] = adj_hidden[uh] * (1.0 - hv * hv);
                const double g = dz1[uh];
                if (g == 0.0) continue;
                double* w1_row = result.grads.w1.data() + uh * params.n_in;
                const double* w1p = params.w1.data() + uh * params.n_in;
                for (int k = 0; k < params.n_in; ++k) {
                    w1_row[k] += g * scratch.sensors[static_cast<std::size_t>(k)];
                    adj_sensors[static_cast<std::size_t>(k)] += w1p[k] * g;
                }
                result.grads.b1[uh] += g;
            }

            // sensors: 10 CPG channels are parameter-free; per mass
            // (vx, vy, dx, dy) with dx, dy measured against the center of mass
            double sum_x = 0.0, sum_y = 0.0;
            for (int i = 0; i < n_masses; ++i) {
                const std::size_t base = static_cast<std::size_t>(10 + 4 * i);
                const std::size_t ui = static_cast<std::size_t>(i);
                adj_v_cur[ui].x += adj_sensors[base + 0];
                adj_v_cur[ui].y += adj_sensors[base + 1];
                adj_p_cur[ui].x += adj_sensors[base + 2];
                adj_p_cur[ui].y += adj_sensors[base + 3];
                sum_x += adj_sensors[base + 2];
                sum_y += adj_sensors[base + 3];
            }
            for (int i = 0; i < n_masses; ++i) {
                const std::size_t ui = static_cast<std::size_t>(i);
                adj_p_cur[ui].x -= sum_x * inv_m;
                adj_p_cur[ui].y -= sum_y * inv_m;
            }
        }

        std::swap(adj_p, adj_p_cur);
        std::swap(adj_v, adj_v_cur);
    }

    return result;
}

GradientResult gradient(const Morphology& morphology, const ControllerParams& params,
                        const Terrain& terrain, const SimConfig& config, FrictionMode mode,
                        int checkpoint_every) {
    AdjointSeed seed;
    const double inv_m = 1.0 / static_cast<double>(morphology.mass_count());
    seed.dpos.assign(static_cast<std::size_t>(morphology.mass_count()), Vec2{-inv_m, 0.0});
    seed.dvel.assign(static_cast<std::size_t>(morphology.mass_count()), Vec2{0, 0});
    return rollout_adjoint(morphology, params, terrain, config, mode, checkpoint_every, seed);
}

double learning_rate(const GradientVector& grads, double c, double eps, double max_lr) {
    const double raw = c / (std::sqrt(grads.squared_norm()) + eps);
    return std::min(raw, max_lr);
}

TrainResult train(const Morphology& morphology, const Terrain& terrain, const SimConfig& sim,
                  const LearnConfig& learn, FrictionMode mode, Rng& rng) {
    TrainResult result;
    result.losses.assign(static_cast<std::size_t>(learn.iterations), kNan);
    result.lrs.assign(static_cast<std::size_t>(learn.iterations), kNan);
    result.grad_norms.assign(static_cast<std::size_t>(learn.iterations), kNan);

    const int n_in = sensor_count(morphology.mass_count());
    ControllerParams params =
        init_params(rng, n_in, morphology.active_spring_count, learn.xavier_gain);
    result.best_params = params;

    double best_loss = std::numeric_limits<double>::infinity();
    bool stable = true;
    for (int it = 0; it < learn.iterations; ++it) {
        const GradientResult g =
            gradient(morphology, params, terrain, sim, mode, learn.checkpoint_every);
        result.losses[static_cast<std::size_t>(it)] = g.loss;
        if (g.unstable || !std::isfinite(g.loss) || !g.grads.finite()) {
            stable = false;
            break;
        }
        if (g.loss < best_loss) {
            best_loss = g.loss;
            result.best_params = params;
        }
        const double lr = learning_rate(g.grads, learn.lr_constant, learn.lr_eps, learn.max_lr);
        result.lrs[static_cast<std::size_t>(it)] = lr;
        result.grad_norms[static_cast<std::size_t>(it)] = std::sqrt(g.grads.squared_norm());
        for (std::size_t k = 0; k < params.w1.size(); ++k) params.w1[k] -= lr * g.grads.w1[k];
        for (std::size_t k = 0; k < params.b1.size(); ++k) params.b1[k] -= lr * g.grads.b1[k];
        for (std::size_t k = 0; k < params.w2.size(); ++k) params.w2[k] -= lr * g.grads.w2[k];
        for (std::size_t k = 0; k < params.b2.size(); ++k) params.b2[k] -= lr * g.grads.b2[k];
    }

    result.valid = stable;
    result.initial_performance = -result.losses[0];
    result.fitness = std::isfinite(best_loss) ? -best_loss : kNan;
    return result;
}

} // namespace evospring
