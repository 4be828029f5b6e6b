#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wtkin/collision.hpp"
#include "wtkin/grid.hpp"

namespace wtkin {

struct EvolveConfig {
    double dt_init = 1e-3;
    double dt_min = 1e-12;
    double safety = 0.9;        // step controller safety factor
    double rtol = 1e-4;
    double atol = 1e-12;        // absolute floor inside the error weight
    double t_end = 1e9;
    std::size_t snapshot_every = 1;     // persistence stride (CLI side)
    double blowup_growth_factor = 1e3;  // sup f threshold relative to t=0
    double negativity_tol = 1e-12;      // relative undershoot that clips to 0
    std::size_t max_steps = 200000;
};

enum class StopReason { reached_t_end, blowup_detected, dt_underflow };

std::string to_string(StopReason r);

// Snapshot-aligned series: one entry per accepted step (plus t = 0).
struct TrajectoryRecord {
    std::shared_ptr<const EnergyGrid> grid;
    std::vector<double> times;
    std::vector<std::vector<double>> snapshots;
    std::vector<double> n_moment;  // int f sqrt(eps) deps
    std::vector<double> e_moment;  // int f eps^{3/2} deps
    std::vector<double> sup_f;
    StopReason stop_reason = StopReason::reached_t_end;

    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

struct StepResult {
    Spectrum next;
    double accepted_dt = 0.0;
    double next_dt = 0.0;
    bool underflow = false;  // dt fell below dt_min before acceptance
};

// One accepted Dormand-Prince 5(4) step (retries internally on rejection).
StepResult step_adaptive(const CollisionOperator& op, const Spectrum& s,
                         double dt, const EvolveConfig& cfg);

TrajectoryRecord run(const CollisionOperator& op, const Spectrum& f0,
                     const EvolveConfig& cfg);

struct BlowupFit {
    double t_star = 0.0;
    double residual = 0.0;  // rms relative misfit of the linear model
    std::size_t points_used = 0;
};

// Fits sup_f^{-1/alpha} ~ c (T* - t) over the last decade of growth and
// extrapolates the zero crossing.
BlowupFit estimate_blowup_time(const TrajectoryRecord& rec, double alpha);

}  // namespace wtkin
