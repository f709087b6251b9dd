#pragma once

#include <cstddef>
#include <vector>

#include "odesurro/circuit.hpp"
#include "odesurro/error.hpp"

namespace odesurro {

struct SolverConfig {
  double dt = 0.01;             // minutes
  std::size_t n_steps = 50000;  // 500 simulated minutes at the default dt

  bool valid() const { return dt > 0.0 && n_steps >= 1; }
  bool operator==(const SolverConfig&) const = default;
};

// Row k is the state at t = k * dt; row 0 is the initial condition.
struct Trajectory {
  double dt = 0.0;
  std::vector<StateVector> states;

  std::size_t rows() const { return states.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

inline StateVector euler_step(const StateVector& s, const ParameterSet& p, double dt,
                              const CircuitOptions& opts = {}) {
  const StateVector d = rhs(s, p, opts);
  StateVector next;
  for (std::size_t j = 0; j < kNumSpecies; ++j) next[j] = s[j] + dt * d[j];
  return next;
}

inline Trajectory integrate(const StateVector& init, const ParameterSet& p,
                            const SolverConfig& cfg, const CircuitOptions& opts = {}) {
  if (!cfg.valid()) throw ConfigError("solver requires dt > 0 and n_steps >= 1");
  if (!all_finite(init)) throw NonFiniteState(0);

  Trajectory traj;
  traj.dt = cfg.dt;
  traj.states.reserve(cfg.n_steps + 1);
  traj.states.push_back(init);
  for (std::size_t k = 1; k <= cfg.n_steps; ++k) {
    StateVector next = euler_step(traj.states.back(), p, cfg.dt, opts);
    if (!all_finite(next)) throw NonFiniteState(k);
    traj.states.push_back(next);
  }
  return traj;
}

// Same arithmetic as integrate() but keeps only the running state.
inline StateVector advance(StateVector s, const ParameterSet& p, double dt, std::size_t k,
                           const CircuitOptions& opts = {}) {
  if (k < 1) throw ConfigError("advance requires k >= 1");
  if (!(dt > 0.0)) throw ConfigError("advance requires dt > 0");
  for (std::size_t step = 1; step <= k; ++step) {
    s = euler_step(s, p, dt, opts);
    if (!all_finite(s)) throw NonFiniteState(step);
  }
  return s;
}

}  // namespace odesurro
