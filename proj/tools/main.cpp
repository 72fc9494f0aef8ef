// cimcs: experiment harness for the binary-support compressed-sensing
// solvers. Subcommands: gen, run, mri, sweep-g2, sweep-tau, report.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cimcs/datagen.hpp"
#include "cimcs/io.hpp"
#include "cimcs/model.hpp"
#include "cimcs/mri.hpp"
#include "cimcs/orchestrator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cimcs;

namespace {

struct Config {
    // instance grid
    int N = 500;
    std::vector<double> a{0.1};
    std::vector<double> alpha{0.6};
    std::vector<double> nu{0.05};
    int trials = 10;
    std::string load_dir;  // run on saved bundles instead of regenerating

    HyperParams hp;
    std::string cdp = "jacobi";
    std::vector<std::string> backends{"mfz-bn", "mfz-cn", "pp"};

    // mri
    std::string mri_image;  // empty -> built-in phantom
    int mri_size = 64;
    double mri_sparseness = 0.212;
    double mri_compression = 0.4;
    double mri_gamma = 1e-4;
    double mri_lambda_l1 = 3e-4;
    std::vector<double> mri_eta{0.01, 0.02, 0.05, 0.1};
    int mri_masks = 5;
    int mri_velo = 11;
    double mri_K_mfz = 0.1;
    double mri_K_pp = 0.01;

    // sweeps
    std::vector<double> g2_list{1e-7, 1e-1};
    std::vector<int> g2_trace_at{2, 20};
    std::vector<double> tau_mfz{1.0, 0.15};
    std::vector<double> tau_pp{1.0, 0.15};
    std::vector<double> sweep_a{0.05, 0.1, 0.15, 0.2};
    double sweep_alpha = 0.6;
    double sweep_nu = 0.1;
    int sweep_trials = 5;

    // output
    std::string out = "out";
    bool write_history = true;
    bool write_traces = false;
    std::vector<int> trace_alternations;

    // harness
    std::uint64_t seed_base = 1;
    int workers = 0;  // 0 -> hardware
    bool paper_params = false;
    bool strict = false;
    std::string backend_override;
};

double jget(const json& j, const char* key, double dflt) {
    return j.contains(key) ? j.at(key).get<double>() : dflt;
}
int jget(const json& j, const char* key, int dflt) {
    return j.contains(key) ? j.at(key).get<int>() : dflt;
}
bool jget(const json& j, const char* key, bool dflt) {
    return j.contains(key) ? j.at(key).get<bool>() : dflt;
}
std::string jget(const json& j, const char* key, const std::string& dflt) {
    return j.contains(key) ? j.at(key).get<std::string>() : dflt;
}
std::vector<double> jlist(const json& j, const char* key, std::vector<double> dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    return v.get<std::vector<double>>();
}

void check_keys(const json& j, const char* section,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) ok = true;
        if (!ok)
            throw config_error(std::string("config: unknown key '") + item.key() +
                               "' in section '" + section + "'");
    }
}

Config load_config(const std::string& path) {
    Config c;
    if (path.empty()) return c;
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    check_keys(root, "root", {"instance", "solver", "schedule", "mri", "output"});
    if (root.contains("instance")) {
        const json& j = root["instance"];
        check_keys(j, "instance", {"N", "a", "alpha", "nu", "trials", "load_dir"});
        c.N = jget(j, "N", c.N);
        c.a = jlist(j, "a", c.a);
        c.alpha = jlist(j, "alpha", c.alpha);
        c.nu = jlist(j, "nu", c.nu);
        c.trials = jget(j, "trials", c.trials);
        c.load_dir = jget(j, "load_dir", c.load_dir);
    }
    if (root.contains("solver")) {
        const json& j = root["solver"];
        check_keys(j, "solver",
                   {"g2", "j", "K", "beta", "tau", "dt", "n_steps", "mu_abort",
                    "loss_minus_j", "cdp", "dt_c", "jacobi_iters", "cg_max_iters",
                    "cg_tol", "backends", "g2_list", "g2_trace_at", "tau_mfz", "tau_pp",
                    "sweep_a", "sweep_alpha", "sweep_nu", "sweep_trials"});
        c.hp.g2 = jget(j, "g2", c.hp.g2);
        c.hp.j = jget(j, "j", c.hp.j);
        c.hp.K = jget(j, "K", c.hp.K);
        c.hp.beta = jget(j, "beta", c.hp.beta);
        c.hp.tau = jget(j, "tau", c.hp.tau);
        c.hp.dt = jget(j, "dt", c.hp.dt);
        c.hp.n_steps = jget(j, "n_steps", c.hp.n_steps);
        c.hp.mu_abort = jget(j, "mu_abort", c.hp.mu_abort);
        c.hp.mfz_loss_minus_j = jget(j, "loss_minus_j", c.hp.mfz_loss_minus_j);
        c.cdp = jget(j, "cdp", c.cdp);
        c.hp.dt_c = jget(j, "dt_c", c.hp.dt_c);
        c.hp.jacobi_iters = jget(j, "jacobi_iters", c.hp.jacobi_iters);
        c.hp.cg_max_iters = jget(j, "cg_max_iters", c.hp.cg_max_iters);
        c.hp.cg_tol = jget(j, "cg_tol", c.hp.cg_tol);
        if (j.contains("backends")) c.backends = j["backends"].get<std::vector<std::string>>();
        c.g2_list = jlist(j, "g2_list", c.g2_list);
        if (j.contains("g2_trace_at")) c.g2_trace_at = j["g2_trace_at"].get<std::vector<int>>();
        c.tau_mfz = jlist(j, "tau_mfz", c.tau_mfz);
        c.tau_pp = jlist(j, "tau_pp", c.tau_pp);
        c.sweep_a = jlist(j, "sweep_a", c.sweep_a);
        c.sweep_alpha = jget(j, "sweep_alpha", c.sweep_alpha);
        c.sweep_nu = jget(j, "sweep_nu", c.sweep_nu);
        c.sweep_trials = jget(j, "sweep_trials", c.sweep_trials);
    }
    if (root.contains("schedule")) {
        const json& j = root["schedule"];
        check_keys(j, "schedule", {"p_thr", "d", "eta_init", "eta_end", "velo"});
        c.hp.p_thr = jget(j, "p_thr", c.hp.p_thr);
        c.hp.d = jget(j, "d", c.hp.d);
        c.hp.eta_init = jget(j, "eta_init", c.hp.eta_init);
        c.hp.eta_end = jget(j, "eta_end", c.hp.eta_end);
        c.hp.velo = jget(j, "velo", c.hp.velo);
    }
    if (root.contains("mri")) {
        const json& j = root["mri"];
        check_keys(j, "mri",
                   {"image", "size", "sparseness", "compression", "gamma", "lambda_l1",
                    "eta", "masks", "velo", "K_mfz", "K_pp"});
        c.mri_image = jget(j, "image", c.mri_image);
        c.mri_size = jget(j, "size", c.mri_size);
        c.mri_sparseness = jget(j, "sparseness", c.mri_sparseness);
        c.mri_compression = jget(j, "compression", c.mri_compression);
        c.mri_gamma = jget(j, "gamma", c.mri_gamma);
        c.mri_lambda_l1 = jget(j, "lambda_l1", c.mri_lambda_l1);
        c.mri_eta = jlist(j, "eta", c.mri_eta);
        c.mri_masks = jget(j, "masks", c.mri_masks);
        c.mri_velo = jget(j, "velo", c.mri_velo);
        c.mri_K_mfz = jget(j, "K_mfz", c.mri_K_mfz);
        c.mri_K_pp = jget(j, "K_pp", c.mri_K_pp);
    }
    if (root.contains("output")) {
        const json& j = root["output"];
        check_keys(j, "output", {"dir", "history", "traces", "trace_alternations"});
        c.out = jget(j, "dir", c.out);
        c.write_history = jget(j, "history", c.write_history);
        c.write_traces = jget(j, "traces", c.write_traces);
        if (j.contains("trace_alternations"))
            c.trace_alternations = j["trace_alternations"].get<std::vector<int>>();
    }
    return c;
}

// Canonical serialization of the effective configuration; hashed into every
// output header so data rows are traceable to their exact settings.
json config_json(const Config& c) {
    json j;
    j["instance"] = {{"N", c.N},     {"a", c.a},           {"alpha", c.alpha},
                     {"nu", c.nu},   {"trials", c.trials}, {"load_dir", c.load_dir}};
    j["solver"] = {{"g2", c.hp.g2},
                   {"j", c.hp.j},
                   {"K", c.hp.K},
                   {"beta", c.hp.beta},
                   {"tau", c.hp.tau},
                   {"dt", c.hp.dt},
                   {"n_steps", c.hp.n_steps},
                   {"mu_abort", c.hp.mu_abort},
                   {"loss_minus_j", c.hp.mfz_loss_minus_j},
                   {"cdp", c.cdp},
                   {"dt_c", c.hp.dt_c},
                   {"jacobi_iters", c.hp.jacobi_iters},
                   {"cg_max_iters", c.hp.cg_max_iters},
                   {"cg_tol", c.hp.cg_tol},
                   {"backends", c.backends}};
    j["schedule"] = {{"p_thr", c.hp.p_thr},
                     {"d", c.hp.d},
                     {"eta_init", c.hp.eta_init},
                     {"eta_end", c.hp.eta_end},
                     {"velo", c.hp.velo}};
    j["mri"] = {{"image", c.mri_image},
                {"size", c.mri_size},
                {"sparseness", c.mri_sparseness},
                {"compression", c.mri_compression},
                {"gamma", c.mri_gamma},
                {"lambda_l1", c.mri_lambda_l1},
                {"eta", c.mri_eta},
                {"masks", c.mri_masks},
                {"velo", c.mri_velo},
                {"K_mfz", c.mri_K_mfz},
                {"K_pp", c.mri_K_pp}};
    j["harness"] = {{"seed_base", c.seed_base},
                    {"paper_params", c.paper_params},
                    {"rng", kRngAlgorithm}};
    return j;
}

std::string config_hash(const Config& c) { return hex64(fnv1a64(config_json(c).dump())); }

std::vector<std::string> csv_comments(const Config& c, const std::vector<std::uint64_t>& seeds) {
    std::string list;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (i) list += " ";
        list += std::to_string(seeds[i]);
    }
    return {"config " + config_hash(c), "rng " + std::string(kRngAlgorithm),
            "seeds " + list};
}

// splitmix64 on (base, salt): decorrelates solver streams from the instance
// stream and from each other across backends.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Paper parameter auto-selection that depends on backend and noise level.
HyperParams params_for(const Config& c, Backend backend, double nu) {
    HyperParams hp = c.hp;
    if (!c.paper_params) return hp;
    auto near = [](double x, double y) { return std::abs(x - y) < 1e-12; };
    hp.eta_init = 0.8;
    if (near(nu, 0.05)) hp.eta_end = 0.18;
    else if (near(nu, 0.1)) hp.eta_end = 0.35;
    if (backend == Backend::PositiveP) {
        if (near(nu, 0.05)) hp.tau = 0.21;
        else if (near(nu, 0.1)) hp.tau = 0.15;
        else if (near(nu, 0.0)) hp.tau = 1.0;
    } else {
        hp.tau = 1.0;
    }
    return hp;
}

CdpMethod cdp_from_string(const std::string& s) {
    if (s == "jacobi") return CdpMethod::Jacobi;
    if (s == "cg") return CdpMethod::ConjugateGradient;
    throw config_error("config: cdp must be 'jacobi' or 'cg'");
}

std::vector<Backend> selected_backends(const Config& c) {
    std::vector<Backend> out;
    if (!c.backend_override.empty()) {
        out.push_back(backend_from_string(c.backend_override));
        return out;
    }
    for (const auto& name : c.backends) out.push_back(backend_from_string(name));
    if (out.empty()) throw config_error("config: no backends selected");
    return out;
}

void run_jobs(int workers, int njobs, const std::function<void(int)>& work) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, njobs);
    if (workers <= 1) {
        for (int i = 0; i < njobs; ++i) work(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < njobs; i = next.fetch_add(1)) work(i);
        });
    for (auto& th : pool) th.join();
}

std::string bundle_name(const ProblemInstance& inst) {
    std::ostringstream os;
    os << "N" << inst.N() << "_al" << format_double(inst.alpha) << "_a"
       << format_double(inst.a) << "_nu" << format_double(inst.nu) << "_s" << inst.seed;
    return os.str();
}

struct GridPoint {
    double a, alpha, nu;
    std::uint64_t seed;
};

std::vector<GridPoint> instance_grid(const Config& c) {
    std::vector<GridPoint> grid;
    std::uint64_t idx = 0;
    for (double alpha : c.alpha)
        for (double a : c.a)
            for (double nu : c.nu)
                for (int t = 0; t < c.trials; ++t)
                    grid.push_back({a, alpha, nu, c.seed_base + idx++});
    return grid;
}

int cmd_gen(const Config& c) {
    const fs::path dir = fs::path(c.out) / "instances";
    fs::create_directories(dir);
    const auto grid = instance_grid(c);
    for (const auto& g : grid) {
        const ProblemInstance inst = gen_instance(c.N, g.alpha, g.a, g.nu, g.seed);
        save_instance(inst, dir / bundle_name(inst));
    }
    std::cout << "wrote " << grid.size() << " instance bundles under " << dir.string()
              << "\n";
    return 0;
}

struct TrialOutcome {
    Backend backend;
    ProblemInstance meta;  // a, alpha, nu, seed (matrices may be dropped)
    AlternatingResult result;
};

void write_mfz_trace_csv(const fs::path& path, const Config& c,
                         const std::vector<std::uint64_t>& seeds, const MfzTrace& trace) {
    CsvWriter w(path, csv_comments(c, seeds), {"step", "t", "spin_index", "c", "e"});
    for (const auto& s : trace)
        for (Eigen::Index r = 0; r < s.c.size(); ++r)
            w.row({CsvWriter::cell(s.step), CsvWriter::cell(s.t),
                   CsvWriter::cell(static_cast<int>(r)), CsvWriter::cell(s.c[r]),
                   CsvWriter::cell(s.e[r])});
}

void write_pp_trace_csv(const fs::path& path, const Config& c,
                        const std::vector<std::uint64_t>& seeds, const PpTrace& trace) {
    CsvWriter w(path, csv_comments(c, seeds),
                {"step", "t", "spin_index", "mu", "mu_tilde", "n", "m", "e"});
    for (const auto& s : trace)
        for (Eigen::Index r = 0; r < s.mu.size(); ++r)
            w.row({CsvWriter::cell(s.step), CsvWriter::cell(s.t),
                   CsvWriter::cell(static_cast<int>(r)), CsvWriter::cell(s.mu[r]),
                   CsvWriter::cell(s.mu_tilde[r]), CsvWriter::cell(s.n[r]),
                   CsvWriter::cell(s.m[r]), CsvWriter::cell(s.e[r])});
}

int cmd_run(const Config& c) {
    fs::create_directories(c.out);
    std::vector<ProblemInstance> instances;
    if (!c.load_dir.empty()) {
        for (const auto& entry : fs::directory_iterator(c.load_dir))
            if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
                instances.push_back(load_instance(entry.path()));
        std::sort(instances.begin(), instances.end(),
                  [](const ProblemInstance& lhs, const ProblemInstance& rhs) {
                      return lhs.seed < rhs.seed;
                  });
        if (instances.empty())
            throw config_error("no instance bundles found under " + c.load_dir);
    } else {
        for (const auto& g : instance_grid(c))
            instances.push_back(gen_instance(c.N, g.alpha, g.a, g.nu, g.seed));
    }
    const auto backends = selected_backends(c);
    const CdpMethod method = cdp_from_string(c.cdp);

    struct Job {
        int instance_idx;
        Backend backend;
    };
    std::vector<Job> jobs;
    for (Backend b : backends)
        for (size_t i = 0; i < instances.size(); ++i)
            jobs.push_back({static_cast<int>(i), b});

    std::vector<TrialOutcome> outcomes(jobs.size());
    std::vector<CimObserver> observers(jobs.size());
    run_jobs(c.workers, static_cast<int>(jobs.size()), [&](int k) {
        const Job& job = jobs[k];
        const ProblemInstance& inst = instances[job.instance_idx];
        const HyperParams hp = params_for(c, job.backend, inst.nu);
        SolverProblem prob = make_problem(inst);
        Rng rng(mix_seed(inst.seed, static_cast<std::uint64_t>(job.backend)));
        AlternateOptions opts;
        opts.method = method;
        const bool trace_me = c.write_traces && job.instance_idx == 0;
        if (trace_me) {
            observers[k].trace_at.insert(c.trace_alternations.begin(),
                                         c.trace_alternations.end());
            if (observers[k].trace_at.empty()) observers[k].trace_at.insert(hp.velo);
            opts.observer = &observers[k];
        }
        TrialOutcome& out = outcomes[k];
        out.backend = job.backend;
        out.meta.a = inst.a;
        out.meta.alpha = inst.alpha;
        out.meta.nu = inst.nu;
        out.meta.seed = inst.seed;
        out.result = alternating_minimize(prob, job.backend, hp, default_r_init(prob),
                                          rng, opts);
    });

    std::vector<std::uint64_t> seeds;
    for (const auto& inst : instances) seeds.push_back(inst.seed);
    const auto comments = csv_comments(c, seeds);

    int failures = 0;
    {
        CsvWriter summary(fs::path(c.out) / "summary.csv", comments,
                          {"backend", "a", "alpha", "nu", "seed", "final_rmse",
                           "final_hamming", "min_hamiltonian"});
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& out : outcomes) {
            const bool failed = out.result.failed;
            if (failed) ++failures;
            summary.row({backend_name(out.backend), CsvWriter::cell(out.meta.a),
                         CsvWriter::cell(out.meta.alpha), CsvWriter::cell(out.meta.nu),
                         CsvWriter::cell(out.meta.seed),
                         CsvWriter::cell(failed ? nan : out.result.final_rmse()),
                         CsvWriter::cell(failed ? nan : out.result.final_hamming()),
                         CsvWriter::cell(failed ? nan : out.result.min_hamiltonian())});
        }
    }
    if (c.write_history) {
        for (Backend b : backends) {
            CsvWriter hist(fs::path(c.out) / ("history_" + backend_name(b) + ".csv"),
                           comments, history_csv_columns());
            int trial = 0;
            for (const auto& out : outcomes)
                if (out.backend == b) append_history_rows(hist, trial++, out.result.history);
        }
    }
    if (c.write_traces) {
        for (size_t k = 0; k < jobs.size(); ++k) {
            for (const auto& [i, tr] : observers[k].mfz_traces)
                write_mfz_trace_csv(fs::path(c.out) / ("trace_" +
                                        backend_name(jobs[k].backend) + "_i" +
                                        std::to_string(i) + ".csv"),
                                    c, seeds, tr);
            for (const auto& [i, tr] : observers[k].pp_traces)
                write_pp_trace_csv(fs::path(c.out) / ("trace_" +
                                       backend_name(jobs[k].backend) + "_i" +
                                       std::to_string(i) + ".csv"),
                                   c, seeds, tr);
        }
    }
    if (failures > 0) {
        CsvWriter fail(fs::path(c.out) / "failures.csv", comments,
                       {"backend", "a", "alpha", "nu", "seed", "alternation", "reason"});
        for (const auto& out : outcomes)
            if (out.result.failed) {
                std::string reason = out.result.fail_reason;
                std::replace(reason.begin(), reason.end(), ',', ';');
                fail.row({backend_name(out.backend), CsvWriter::cell(out.meta.a),
                          CsvWriter::cell(out.meta.alpha), CsvWriter::cell(out.meta.nu),
                          CsvWriter::cell(out.meta.seed),
                          CsvWriter::cell(out.result.fail_alternation), reason});
            }
        std::cerr << failures << " trial(s) failed; reasons in failures.csv\n";
    }
    std::cout << "ran " << outcomes.size() << " trials ("
              << (outcomes.size() - failures) << " ok) -> " << c.out << "\n";
    return (c.strict && failures > 0) ? 2 : 0;
}

int cmd_mri(const Config& c) {
    fs::create_directories(c.out);
    MatrixXd source = c.mri_image.empty() ? phantom_image(c.mri_size, c.mri_size)
                                          : read_pgm(c.mri_image);
    MatrixXd resized = bilinear_resize(source, c.mri_size, c.mri_size);
    const SparsifyResult target = sparsify_wavelet(resized, c.mri_sparseness);
    write_pgm(target.image, fs::path(c.out) / "target.pgm");

    const int N = c.mri_size * c.mri_size;
    const int M = static_cast<int>(round_half_away(c.mri_compression * N));
    const Backend backend = c.backend_override.empty()
                                ? Backend::MfzBN
                                : backend_from_string(c.backend_override);

    HyperParams hp = c.hp;
    hp.velo = c.mri_velo;
    if (c.paper_params) hp.d = 0.6;
    hp.K = backend == Backend::PositiveP ? c.mri_K_pp : c.mri_K_mfz;

    std::vector<std::uint64_t> seeds;
    for (int m = 0; m < c.mri_masks; ++m) seeds.push_back(c.seed_base + m);
    const auto comments = csv_comments(c, seeds);

    struct MriJob {
        int mask_idx;
        double eta;
    };
    std::vector<MriJob> jobs;
    for (int m = 0; m < c.mri_masks; ++m)
        for (double eta : c.mri_eta) jobs.push_back({m, eta});

    struct MriOut {
        double rmse = 0.0;
        bool failed = false;
        VectorXd coeffs;
    };
    std::vector<MriOut> outs(jobs.size());
    std::vector<double> lasso_rmse(c.mri_masks, 0.0);

    run_jobs(c.workers, c.mri_masks, [&](int m) {
        const SamplingMask mask = make_mask(c.mri_size, c.mri_size, M, seeds[m]);
        {
            CsvWriter mw(fs::path(c.out) / ("mask_" + std::to_string(m) + ".csv"),
                         comments, {"index"});
            for (int idx : mask.indices) mw.row({CsvWriter::cell(idx)});
        }
        auto transform =
            std::make_shared<const MriTransform>(target.image, mask, c.mri_gamma);
        const VectorXd warm = lasso_init(*transform, c.mri_lambda_l1);
        const VectorXi warm_sigma = VectorXi::Ones(N);
        lasso_rmse[m] = rmse(warm, warm_sigma, target.coeffs,
                             VectorXi::Ones(N));
        SolverProblem prob = make_problem(transform, &target.coeffs);
        for (size_t k = 0; k < jobs.size(); ++k) {
            if (jobs[k].mask_idx != m) continue;
            HyperParams hpe = hp;
            hpe.eta_init = hpe.eta_end = jobs[k].eta;  // flat threshold schedule
            Rng rng(mix_seed(seeds[m], std::hash<double>{}(jobs[k].eta)));
            AlternateOptions opts;
            opts.method = CdpMethod::ConjugateGradient;
            const AlternatingResult res =
                alternating_minimize(prob, backend, hpe, warm, rng, opts);
            outs[k].failed = res.failed;
            if (!res.failed) {
                outs[k].rmse = res.final_rmse();
                outs[k].coeffs = res.R.cwiseProduct(res.sigma.cast<double>());
            }
        }
    });

    int failures = 0;
    {
        CsvWriter box(fs::path(c.out) / "mri_rmse.csv", comments, {"eta", "trial", "rmse"});
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (size_t k = 0; k < jobs.size(); ++k) {
            if (outs[k].failed) ++failures;
            box.row({CsvWriter::cell(jobs[k].eta), CsvWriter::cell(jobs[k].mask_idx),
                     CsvWriter::cell(outs[k].failed ? nan : outs[k].rmse)});
        }
    }
    {
        CsvWriter lw(fs::path(c.out) / "mri_lasso.csv", comments, {"trial", "rmse"});
        for (int m = 0; m < c.mri_masks; ++m)
            lw.row({CsvWriter::cell(m), CsvWriter::cell(lasso_rmse[m])});
    }
    for (size_t k = 0; k < jobs.size(); ++k) {
        if (outs[k].failed || outs[k].coeffs.size() == 0) continue;
        const MatrixXd img =
            haar2_inverse(unvec_image(outs[k].coeffs, c.mri_size, c.mri_size));
        std::ostringstream name;
        name << "recon_eta" << format_double(jobs[k].eta) << "_mask" << jobs[k].mask_idx
             << ".pgm";
        write_pgm(img, fs::path(c.out) / name.str());
    }
    std::cout << "mri: " << jobs.size() << " reconstructions ("
              << (jobs.size() - failures) << " ok) -> " << c.out << "\n";
    return (c.strict && failures > 0) ? 2 : 0;
}

int cmd_sweep_g2(const Config& c) {
    fs::create_directories(c.out);
    const ProblemInstance inst =
        gen_instance(c.N, c.alpha.at(0), c.a.at(0), c.nu.at(0), c.seed_base);
    const SolverProblem prob = make_problem(inst);
    const std::vector<std::uint64_t> seeds{inst.seed};
    const auto comments = csv_comments(c, seeds);
    CsvWriter traces(fs::path(c.out) / "sweep_g2_traces.csv", comments,
                     {"g2", "alternation", "step", "t", "spin_index", "e"});
    CsvWriter summary(fs::path(c.out) / "sweep_g2_summary.csv", comments,
                      {"g2", "alternation", "median_e", "median_log10_e"});
    int failures = 0;
    for (double g2 : c.g2_list) {
        HyperParams hp = params_for(c, Backend::PositiveP, inst.nu);
        hp.g2 = g2;
        CimObserver obs;
        obs.trace_at.insert(c.g2_trace_at.begin(), c.g2_trace_at.end());
        AlternateOptions opts;
        opts.method = cdp_from_string(c.cdp);
        opts.observer = &obs;
        Rng rng(mix_seed(inst.seed, 0xF00DULL));
        const AlternatingResult res = alternating_minimize(
            prob, Backend::PositiveP, hp, default_r_init(prob), rng, opts);
        if (res.failed) {
            ++failures;
            std::cerr << "sweep-g2: trial failed at g2=" << format_double(g2) << ": "
                      << res.fail_reason << "\n";
        }
        for (const auto& [i, tr] : obs.pp_traces)
            for (const auto& s : tr)
                for (Eigen::Index r = 0; r < s.e.size(); ++r)
                    traces.row({CsvWriter::cell(g2), CsvWriter::cell(i),
                                CsvWriter::cell(s.step), CsvWriter::cell(s.t),
                                CsvWriter::cell(static_cast<int>(r)),
                                CsvWriter::cell(s.e[r])});
        for (const auto& rec : res.history)
            summary.row({CsvWriter::cell(g2), CsvWriter::cell(rec.i),
                         CsvWriter::cell(rec.median_e),
                         CsvWriter::cell(std::log10(rec.median_e))});
    }
    std::cout << "sweep-g2 -> " << c.out << "\n";
    return (c.strict && failures > 0) ? 2 : 0;
}

int cmd_sweep_tau(const Config& c) {
    fs::create_directories(c.out);
    std::vector<std::uint64_t> seeds;
    for (int t = 0; t < c.sweep_trials; ++t) seeds.push_back(c.seed_base + t);
    const auto comments = [&] {
        auto v = csv_comments(c, seeds);
        v.push_back("loss_minus_j 1 (mfz backends)");
        return v;
    }();
    CsvWriter out(fs::path(c.out) / "sweep_tau.csv", comments,
                  {"backend", "tau", "a", "seed", "final_rmse"});
    struct TauJob {
        Backend backend;
        double tau, a;
        std::uint64_t seed;
    };
    std::vector<TauJob> jobs;
    for (double a : c.sweep_a)
        for (std::uint64_t seed : seeds) {
            for (Backend b : {Backend::MfzBN, Backend::MfzCN})
                for (double tau : c.tau_mfz) jobs.push_back({b, tau, a, seed});
            for (double tau : c.tau_pp) jobs.push_back({Backend::PositiveP, tau, a, seed});
        }
    if (!c.backend_override.empty()) {
        const Backend only = backend_from_string(c.backend_override);
        std::erase_if(jobs, [&](const TauJob& job) { return job.backend != only; });
    }
    std::vector<double> results(jobs.size());
    std::vector<char> failed(jobs.size(), 0);
    run_jobs(c.workers, static_cast<int>(jobs.size()), [&](int k) {
        const TauJob& job = jobs[k];
        const ProblemInstance inst =
            gen_instance(c.N, c.sweep_alpha, job.a, c.sweep_nu, job.seed);
        HyperParams hp = params_for(c, job.backend, c.sweep_nu);
        hp.tau = job.tau;
        if (job.backend != Backend::PositiveP) hp.mfz_loss_minus_j = true;
        SolverProblem prob = make_problem(inst);
        Rng rng(mix_seed(job.seed, static_cast<std::uint64_t>(job.backend) * 31 +
                                       std::hash<double>{}(job.tau)));
        AlternateOptions opts;
        opts.method = cdp_from_string(c.cdp);
        const AlternatingResult res =
            alternating_minimize(prob, job.backend, hp, default_r_init(prob), rng, opts);
        failed[k] = res.failed ? 1 : 0;
        results[k] = res.failed ? std::numeric_limits<double>::quiet_NaN()
                                : res.final_rmse();
    });
    int failures = 0;
    for (size_t k = 0; k < jobs.size(); ++k) {
        if (failed[k]) ++failures;
        out.row({backend_name(jobs[k].backend), CsvWriter::cell(jobs[k].tau),
                 CsvWriter::cell(jobs[k].a), CsvWriter::cell(jobs[k].seed),
                 CsvWriter::cell(results[k])});
    }
    std::cout << "sweep-tau: " << jobs.size() << " trials (" << (jobs.size() - failures)
              << " ok) -> " << c.out << "\n";
    return (c.strict && failures > 0) ? 2 : 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

int cmd_report(const Config& c) {
    const fs::path in = fs::path(c.out) / "summary.csv";
    std::ifstream f(in);
    if (!f) throw config_error("report: cannot open " + in.string() + " (run 'run' first)");
    struct Key {
        std::string backend;
        double a, alpha, nu;
        bool operator<(const Key& o) const {
            return std::tie(backend, a, alpha, nu) < std::tie(o.backend, o.a, o.alpha, o.nu);
        }
    };
    struct Agg {
        int trials = 0, failures = 0;
        double rmse = 0, hamming = 0, min_h = 0;
        int n_ok = 0;
    };
    std::map<Key, Agg> groups;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {  // column header
            header_seen = true;
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != 8) throw input_error("report: malformed row in summary.csv");
        Key key{cells[0], std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])};
        Agg& agg = groups[key];
        ++agg.trials;
        const double r = std::stod(cells[5]), h = std::stod(cells[6]),
                     mh = std::stod(cells[7]);
        if (std::isnan(mh)) {
            ++agg.failures;
        } else {
            ++agg.n_ok;
            agg.rmse += std::isnan(r) ? 0.0 : r;
            agg.hamming += std::isnan(h) ? 0.0 : h;
            agg.min_h += mh;
        }
    }
    CsvWriter rep(fs::path(c.out) / "report.csv", {"config " + config_hash(c)},
                  {"backend", "a", "alpha", "nu", "trials", "failures", "mean_rmse",
                   "mean_hamming", "mean_min_hamiltonian"});
    for (const auto& [key, agg] : groups) {
        const double n = std::max(agg.n_ok, 1);
        rep.row({key.backend, CsvWriter::cell(key.a), CsvWriter::cell(key.alpha),
                 CsvWriter::cell(key.nu), CsvWriter::cell(agg.trials),
                 CsvWriter::cell(agg.failures), CsvWriter::cell(agg.rmse / n),
                 CsvWriter::cell(agg.hamming / n), CsvWriter::cell(agg.min_h / n)});
        std::cout << key.backend << " a=" << key.a << " alpha=" << key.alpha
                  << " nu=" << key.nu << ": trials=" << agg.trials
                  << " failures=" << agg.failures << " mean_rmse=" << (agg.rmse / n)
                  << " mean_hamming=" << (agg.hamming / n) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"binary-support compressed sensing over simulated optical networks"};
    app.require_subcommand(1);

    std::string config_path, out_flag, backend_flag;
    Config cfg;
    bool seed_given = false, out_given = false;
    std::uint64_t seed_flag = 0;
    int workers_flag = -1;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed-base", seed_flag, "first seed of the trial sequence")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--workers", workers_flag, "worker threads (0 = hardware)");
    app.add_flag("--paper-params", cfg.paper_params,
                 "published parameter preset (tau/eta auto-selected per backend and noise)");
    app.add_option("--backend", backend_flag, "restrict to one backend")
        ->check(CLI::IsMember({"mfz-bn", "mfz-cn", "pp"}));
    app.add_option("--out", out_flag, "output directory")
        ->each([&](const std::string&) { out_given = true; });
    app.add_flag("--strict", cfg.strict, "exit 2 if any trial fails");

    auto* gen = app.add_subcommand("gen", "write instance bundles for the configured grid");
    auto* run = app.add_subcommand("run", "alternating minimization over the instance grid");
    auto* mri = app.add_subcommand("mri", "image reconstruction pipeline");
    auto* sg2 = app.add_subcommand("sweep-g2", "error-feedback traces across g2 values");
    auto* stau = app.add_subcommand("sweep-tau", "RMSE vs sparseness across tau values");
    auto* report = app.add_subcommand("report", "aggregate a summary.csv into means");
    for (auto* sub : {gen, run, mri, sg2, stau, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // bad flags are configuration errors
    }

    try {
        const bool paper_flag = cfg.paper_params;
        const bool strict_flag = cfg.strict;
        cfg = load_config(config_path);
        cfg.paper_params = paper_flag;
        cfg.strict = strict_flag;
        if (seed_given) cfg.seed_base = seed_flag;
        if (workers_flag >= 0) cfg.workers = workers_flag;
        if (!backend_flag.empty()) cfg.backend_override = backend_flag;
        if (out_given) cfg.out = out_flag;
        cfg.hp.validate();

        if (gen->parsed()) return cmd_gen(cfg);
        if (run->parsed()) return cmd_run(cfg);
        if (mri->parsed()) return cmd_mri(cfg);
        if (sg2->parsed()) return cmd_sweep_g2(cfg);
        if (stau->parsed()) return cmd_sweep_tau(cfg);
        if (report->parsed()) return cmd_report(cfg);
        throw config_error("no subcommand");
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
