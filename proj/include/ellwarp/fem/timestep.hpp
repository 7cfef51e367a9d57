#pragma once

#include <iosfwd>

#include "ellwarp/cg.hpp"
#include "ellwarp/fem/assembly.hpp"
#include "ellwarp/kernels.hpp"

namespace ellwarp::fem {

struct State {
    std::vector<real> phi;  // nodal membrane potential
    std::vector<real> r;    // recovery variable, one value per integration point
    std::vector<real> phi_n;
    std::vector<real> r_n;
    real time = 0.0;

    static State uniform(idx nnodes, idx nelements, real phi0, real r0);
};

struct TimestepConfig {
    real outer_tol = 1e-8;
    idx outer_max_it = 25;
    real inner_tol = 1e-10;
    idx inner_max_it = 25;
    bool lumped_mass = true;
    std::string kernel_id = "csr_ref";
    CgConfig cg{.rel_tolerance = 1e-12, .max_iterations = 2000};
    WarpModelConfig warp;
    bool adaptive_dt = false;  // halve on failure / grow after easy steps
};

struct PhaseTimes {
    real local_and_element = 0.0;  // inner Newton + element kernels
    real assembly = 0.0;
    real reorder = 0.0;  // kernel layout preparation per outer iteration
    real solve = 0.0;
    real other = 0.0;
    real total = 0.0;
};

struct TimestepDiagnostics {
    idx outer_iterations = 0;  // residual evaluations (updates = iterations - 1)
    std::vector<real> outer_residuals;
    idx total_cg_iterations = 0;
    PhaseTimes phases;
    real dt_used = 0.0;
};

struct FemError : std::runtime_error {
    FemError(const std::string& msg, idx step) : std::runtime_error(msg), step_index(step) {}
    idx step_index;
};

// One backward-Euler step: outer Newton on phi with the per-point recovery
// solve nested inside, linear solves through the selected SPMV kernel.
TimestepDiagnostics timestep(State& state, const TetMesh& mesh, const AssemblyMap& map,
                             const ApParams& params, const TimestepConfig& cfg, idx step_index = 0);

// Owns mesh, map and state; applies the optional adaptive dt controller.
class FemSimulator {
  public:
    FemSimulator(TetMesh mesh, ApParams params, TimestepConfig cfg, real phi0 = 0.0, real r0 = 0.0);

    TimestepDiagnostics step();
    const State& state() const { return state_; }
    State& state() { return state_; }
    const TetMesh& mesh() const { return mesh_; }
    const AssemblyMap& map() const { return map_; }
    const ApParams& params() const { return params_; }
    idx steps_taken() const { return steps_; }

  private:
    TetMesh mesh_;
    ApParams params_;
    TimestepConfig cfg_;
    AssemblyMap map_;
    State state_;
    idx steps_ = 0;
    real dt_max_ = 0.0;
};

// Checkpoint: magic + version header, counts, time, phi array, r array.
void save_checkpoint(std::ostream& out, const State& s);
State load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const State& s);
State load_checkpoint_file(const std::string& path);

}  // namespace ellwarp::fem
