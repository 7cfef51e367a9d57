#include "ellwarp/fem/timestep.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ellwarp::fem {

namespace {

using Clock = std::chrono::steady_clock;

real seconds_since(Clock::time_point t0) {
    return std::chrono::duration<real>(Clock::now() - t0).count();
}

real norm2(std::span<const real> v) {
    real s = 0.0;
    for (real x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

State State::uniform(idx nnodes, idx nelements, real phi0, real r0) {
    State s;
    s.phi.assign(nnodes, phi0);
    s.r.assign(nelements, r0);
    s.phi_n = s.phi;
    s.r_n = s.r;
    return s;
}

TimestepDiagnostics timestep(State& state, const TetMesh& mesh, const AssemblyMap& map,
                             const ApParams& params, const TimestepConfig& cfg, idx step_index) {
    params.validate();
    require(static_cast<idx>(state.phi.size()) == mesh.nnodes(), "timestep: phi size mismatch");
    require(static_cast<idx>(state.r.size()) == mesh.nelements(), "timestep: r size mismatch");

    TimestepDiagnostics diag;
    diag.dt_used = params.dt;
    const auto t_start = Clock::now();

    ElementOptions eopts;
    eopts.lumped_mass = cfg.lumped_mass;
    eopts.inner_tol = cfg.inner_tol;
    eopts.inner_max_it = cfg.inner_max_it;

    std::vector<real> phi = state.phi_n;
    std::vector<real> r = state.r_n;
    std::vector<ElementOutput> outputs(mesh.nelements());

    real r0_norm = -1.0;
    bool converged = false;
    for (idx outer = 1; outer <= cfg.outer_max_it; ++outer) {
        diag.outer_iterations = outer;

        auto t0 = Clock::now();
        for (idx e = 0; e < mesh.nelements(); ++e) {
            const auto& t = mesh.elements[e];
            const Vec4 phi_e = {phi[t[0]], phi[t[1]], phi[t[2]], phi[t[3]]};
            const Vec4 phi_n_e = {state.phi_n[t[0]], state.phi_n[t[1]], state.phi_n[t[2]],
                                  state.phi_n[t[3]]};
            try {
                outputs[e] = element_kernel(mesh, e, phi_e, phi_n_e, state.r_n[e], params, eopts);
            } catch (const LocalNewtonError& err) {
                throw FemError(std::string("inner Newton failed: ") + err.what(), step_index);
            }
            r[e] = outputs[e].r_updated;
        }
        diag.phases.local_and_element += seconds_since(t0);

        t0 = Clock::now();
        AssembledSystem sys = assemble_spmv(map, outputs);
        diag.phases.assembly += seconds_since(t0);

        const real rnorm = norm2(sys.residual);
        if (r0_norm < 0.0) r0_norm = rnorm;
        diag.outer_residuals.push_back(r0_norm > 0.0 ? rnorm / r0_norm : 0.0);
        if (rnorm <= 1e-14 || (r0_norm > 0.0 && rnorm / r0_norm <= cfg.outer_tol)) {
            converged = true;
            break;
        }

        SparseCsr tangent = map.pattern;
        tangent.values = sys.tangent_values;

        t0 = Clock::now();
        PreparedKernel kernel = prepare_kernel(cfg.kernel_id, tangent, cfg.warp);
        diag.phases.reorder += seconds_since(t0);

        t0 = Clock::now();
        const auto diagonal = extract_diagonal(tangent);
        CgResult cgres;
        try {
            if (kernel.apply_permuted) {
                // permuted-space solve: permute b and the diagonal once, run
                // scatter-free, unpermute the update once
                SpmvFn op = [&](std::span<const real> v) {
                    return kernel.apply_permuted(v, nullptr);
                };
                cgres = cg_solve_permuted(op, sys.residual, *kernel.perm, cfg.cg, diagonal);
            } else {
                SpmvFn op = [&](std::span<const real> v) { return kernel.apply(v, nullptr); };
                cgres = cg_solve(op, sys.residual, cfg.cg, diagonal);
            }
        } catch (const CgDivergenceError& err) {
            throw FemError(std::string("cg diverged: ") + err.what(), step_index);
        }
        if (!cgres.converged) {
            throw FemError("cg did not converge within max_iterations", step_index);
        }
        diag.total_cg_iterations += cgres.iterations;
        diag.phases.solve += seconds_since(t0);

        for (idx i = 0; i < mesh.nnodes(); ++i) phi[i] -= cgres.solution[i];
    }
    if (!converged) {
        throw FemError("outer Newton did not converge in " + std::to_string(cfg.outer_max_it) +
                           " iterations",
                       step_index);
    }

    state.phi = phi;
    state.r = r;
    state.phi_n = phi;
    state.r_n = r;
    state.time += params.dt;

    diag.phases.total = seconds_since(t_start);
    diag.phases.other = diag.phases.total - diag.phases.local_and_element - diag.phases.assembly -
                        diag.phases.reorder - diag.phases.solve;
    return diag;
}

FemSimulator::FemSimulator(TetMesh mesh, ApParams params, TimestepConfig cfg, real phi0, real r0)
    : mesh_(std::move(mesh)),
      params_(params),
      cfg_(std::move(cfg)),
      map_(build_assembly_map(mesh_, cfg_.warp)),
      state_(State::uniform(mesh_.nnodes(), mesh_.nelements(), phi0, r0)) {
    dt_max_ = params_.dt;
}

TimestepDiagnostics FemSimulator::step() {
    if (!cfg_.adaptive_dt) {
        auto diag = timestep(state_, mesh_, map_, params_, cfg_, steps_);
        ++steps_;
        return diag;
    }
    // halve dt on nonconvergence, grow it back after easy steps
    for (int attempt = 0; attempt < 12; ++attempt) {
        try {
            auto diag = timestep(state_, mesh_, map_, params_, cfg_, steps_);
            ++steps_;
            if (diag.outer_iterations <= 3 && params_.dt < dt_max_) {
                params_.dt = std::min(dt_max_, params_.dt * 2.0);
            }
            return diag;
        } catch (const FemError&) {
            params_.dt *= 0.5;
            if (params_.dt < 1e-12) throw;
        }
    }
    throw FemError("adaptive stepping failed to find a workable dt", steps_);
}

namespace {
constexpr char kMagic[4] = {'E', 'W', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(std::ostream& out, const State& s) {
    out.write(kMagic, 4);
    auto put = [&](const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); };
    const std::uint32_t version = kVersion;
    const std::uint64_t nnodes = s.phi.size();
    const std::uint64_t nips = s.r.size();
    put(&version, sizeof version);
    put(&nnodes, sizeof nnodes);
    put(&nips, sizeof nips);
    put(&s.time, sizeof s.time);
    put(s.phi.data(), nnodes * sizeof(real));
    put(s.r.data(), nips * sizeof(real));
    if (!out) throw std::runtime_error("checkpoint write failed");
}

State load_checkpoint(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    auto get = [&](void* p, std::size_t n) { in.read(static_cast<char*>(p), n); };
    std::uint32_t version = 0;
    std::uint64_t nnodes = 0, nips = 0;
    get(&version, sizeof version);
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    get(&nnodes, sizeof nnodes);
    get(&nips, sizeof nips);
    State s;
    get(&s.time, sizeof s.time);
    s.phi.resize(nnodes);
    s.r.resize(nips);
    get(s.phi.data(), nnodes * sizeof(real));
    get(s.r.data(), nips * sizeof(real));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    s.phi_n = s.phi;
    s.r_n = s.r;
    return s;
}

void save_checkpoint_file(const std::string& path, const State& s) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    save_checkpoint(f, s);
}

State load_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return load_checkpoint(f);
}

}  // namespace ellwarp::fem
