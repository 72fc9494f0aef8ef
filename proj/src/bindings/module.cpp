#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cimcs/datagen.hpp"
#include "cimcs/model.hpp"
#include "cimcs/mri.hpp"
#include "cimcs/orchestrator.hpp"

namespace py = pybind11;
using namespace cimcs;

namespace {

py::dict result_to_dict(const AlternatingResult& res) {
    py::list history;
    for (const auto& rec : res.history) {
        py::dict d;
        d["i"] = rec.i;
        d["eta"] = rec.eta;
        d["hamiltonian"] = rec.hamiltonian;
        d["rmse"] = rec.rmse;
        d["hamming"] = rec.hamming;
        d["seconds"] = rec.seconds;
        d["min_e"] = rec.min_e;
        d["median_e"] = rec.median_e;
        history.append(d);
    }
    py::dict out;
    out["R"] = res.R;
    out["sigma"] = res.sigma;
    out["failed"] = res.failed;
    out["fail_reason"] = res.fail_reason;
    out["history"] = history;
    out["min_hamiltonian"] = res.min_hamiltonian();
    out["final_rmse"] = res.final_rmse();
    out["final_hamming"] = res.final_hamming();
    return out;
}

AlternatingResult solve_impl(const ProblemInstance& inst, const std::string& backend,
                             const HyperParams& params, std::uint64_t seed,
                             const std::string& cdp, bool track_best) {
    const SolverProblem prob = make_problem(inst);
    Rng rng(seed);
    AlternateOptions opts;
    if (cdp == "jacobi") opts.method = CdpMethod::Jacobi;
    else if (cdp == "cg") opts.method = CdpMethod::ConjugateGradient;
    else throw config_error("cdp must be 'jacobi' or 'cg'");
    opts.track_best = track_best;
    return alternating_minimize(prob, backend_from_string(backend), params,
                                default_r_init(prob), rng, opts);
}

}  // namespace

PYBIND11_MODULE(_cimcs, m) {
    m.doc() = "binary-support compressed sensing over simulated optical networks";

    py::register_exception<config_error>(m, "ConfigError");
    py::register_exception<input_error>(m, "InputError");
    py::register_exception<divergence_error>(m, "DivergenceError");

    py::class_<HyperParams>(m, "HyperParams")
        .def(py::init<>())
        .def_readwrite("g2", &HyperParams::g2)
        .def_readwrite("j", &HyperParams::j)
        .def_readwrite("K", &HyperParams::K)
        .def_readwrite("beta", &HyperParams::beta)
        .def_readwrite("tau", &HyperParams::tau)
        .def_readwrite("dt", &HyperParams::dt)
        .def_readwrite("n_steps", &HyperParams::n_steps)
        .def_readwrite("p_thr", &HyperParams::p_thr)
        .def_readwrite("d", &HyperParams::d)
        .def_readwrite("eta_init", &HyperParams::eta_init)
        .def_readwrite("eta_end", &HyperParams::eta_end)
        .def_readwrite("velo", &HyperParams::velo)
        .def_readwrite("gamma", &HyperParams::gamma)
        .def_readwrite("dt_c", &HyperParams::dt_c)
        .def_readwrite("jacobi_iters", &HyperParams::jacobi_iters)
        .def_readwrite("cg_max_iters", &HyperParams::cg_max_iters)
        .def_readwrite("cg_tol", &HyperParams::cg_tol)
        .def_readwrite("mu_abort", &HyperParams::mu_abort)
        .def_readwrite("mfz_loss_minus_j", &HyperParams::mfz_loss_minus_j)
        .def("validate", &HyperParams::validate);

    py::class_<ProblemInstance>(m, "ProblemInstance")
        .def_readonly("A", &ProblemInstance::A)
        .def_readonly("y", &ProblemInstance::y)
        .def_readonly("x_true", &ProblemInstance::x_true)
        .def_readonly("xi_true", &ProblemInstance::xi_true)
        .def_readonly("a", &ProblemInstance::a)
        .def_readonly("alpha", &ProblemInstance::alpha)
        .def_readonly("nu", &ProblemInstance::nu)
        .def_readonly("seed", &ProblemInstance::seed)
        .def_property_readonly("N", &ProblemInstance::N)
        .def_property_readonly("M", &ProblemInstance::M)
        .def("has_truth", &ProblemInstance::has_truth);

    m.def("gen_instance", &gen_instance, py::arg("N"), py::arg("alpha"), py::arg("a"),
          py::arg("nu"), py::arg("seed"),
          "random sensing instance: A ~ N(0,1/M), support of round(a*N) ones");
    m.def("hamiltonian", &hamiltonian, py::arg("instance"), py::arg("R"),
          py::arg("sigma"), py::arg("lam"));
    m.def("objective", &objective, py::arg("instance"), py::arg("R"), py::arg("sigma"),
          py::arg("lam"));
    m.def(
        "rmse",
        [](const ProblemInstance& inst, const VectorXd& R, const VectorXi& sigma) {
            return rmse(inst, R, sigma);
        },
        py::arg("instance"), py::arg("R"), py::arg("sigma"));
    m.def("hamming_loss", &hamming_loss, py::arg("sigma"), py::arg("xi_true"));
    m.def(
        "brute_force",
        [](const ProblemInstance& inst, double lam) {
            const BruteForceResult r = brute_force_l0rbcs(inst, lam);
            return py::make_tuple(r.R, r.sigma, r.H);
        },
        py::arg("instance"), py::arg("lam"),
        "exhaustive optimum (N <= 20): returns (R, sigma, objective)");

    m.def("pump_schedule", &pump_schedule, py::arg("t"), py::arg("p_thr"), py::arg("d"));
    m.def("eta_schedule", &eta_schedule, py::arg("i"), py::arg("eta_init"),
          py::arg("eta_end"), py::arg("velo"));

    m.def("solve",
          [](const ProblemInstance& inst, const std::string& backend,
             const HyperParams& params, std::uint64_t seed, const std::string& cdp,
             bool track_best) {
              AlternatingResult res;
              {
                  py::gil_scoped_release release;
                  res = solve_impl(inst, backend, params, seed, cdp, track_best);
              }
              return result_to_dict(res);
          },
          py::arg("instance"), py::arg("backend") = "mfz-bn",
          py::arg("params") = HyperParams{}, py::arg("seed") = 1,
          py::arg("cdp") = "jacobi", py::arg("track_best") = false,
          "alternating support/signal minimization; backend in {mfz-bn, mfz-cn, pp}");

    m.def("phantom_image", &phantom_image, py::arg("H"), py::arg("W"));
    m.def("haar2_forward", &haar2_forward, py::arg("image"));
    m.def("haar2_inverse", &haar2_inverse, py::arg("coeffs"));
    m.def(
        "sparsify_wavelet",
        [](const MatrixXd& img, double target) {
            const SparsifyResult r = sparsify_wavelet(img, target);
            return py::make_tuple(r.image, r.coeffs);
        },
        py::arg("image"), py::arg("target_sparseness"),
        "keep the largest wavelet coefficients; returns (image, coeffs)");
    m.def(
        "make_mask",
        [](int H, int W, int M, std::uint64_t seed) {
            return make_mask(H, W, M, seed).indices;
        },
        py::arg("H"), py::arg("W"), py::arg("M"), py::arg("seed"),
        "sorted k-space sample positions (row-major indices)");
}
