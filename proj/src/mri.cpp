#include "cimcs/mri.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <fftw3.h>

#include "cimcs/datagen.hpp"

namespace cimcs {

namespace {

// FFTW's planner is not reentrant; executions on plan-owned buffers are.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_pow2(int v) { return v >= 1 && (v & (v - 1)) == 0; }

void require_pow2_dims(const MatrixXd& img, const char* who) {
    if (!is_pow2(static_cast<int>(img.rows())) || !is_pow2(static_cast<int>(img.cols())))
        throw input_error(std::string(who) + ": dimensions must be powers of two");
}

// In-place orthonormal average/difference split of the first n entries.
void haar_split(VectorXd& v, int n) {
    static const double s = 1.0 / std::sqrt(2.0);
    VectorXd tmp(n);
    for (int k = 0; k < n / 2; ++k) {
        tmp[k] = (v[2 * k] + v[2 * k + 1]) * s;
        tmp[n / 2 + k] = (v[2 * k] - v[2 * k + 1]) * s;
    }
    v.head(n) = tmp;
}

void haar_merge(VectorXd& v, int n) {
    static const double s = 1.0 / std::sqrt(2.0);
    VectorXd tmp(n);
    for (int k = 0; k < n / 2; ++k) {
        tmp[2 * k] = (v[k] + v[n / 2 + k]) * s;
        tmp[2 * k + 1] = (v[k] - v[n / 2 + k]) * s;
    }
    v.head(n) = tmp;
}

// Second difference with reflective ends, along columns (i varies).
MatrixXd second_diff_cols(const MatrixXd& x) {
    const Eigen::Index H = x.rows(), W = x.cols();
    MatrixXd out(H, W);
    if (H == 1) {
        out.setZero();
        return out;
    }
    for (Eigen::Index j = 0; j < W; ++j) {
        out(0, j) = x(1, j) - x(0, j);
        for (Eigen::Index i = 1; i + 1 < H; ++i)
            out(i, j) = x(i - 1, j) - 2.0 * x(i, j) + x(i + 1, j);
        out(H - 1, j) = x(H - 2, j) - x(H - 1, j);
    }
    return out;
}

MatrixXd second_diff_rows(const MatrixXd& x) { return second_diff_cols(x.transpose()).transpose(); }

VectorXd soft_threshold(const VectorXd& v, double t) {
    VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]) - t;
        out[i] = a > 0.0 ? (v[i] > 0.0 ? a : -a) : 0.0;
    }
    return out;
}

}  // namespace

VectorXd vec_image(const MatrixXd& img) {
    const Eigen::Index H = img.rows(), W = img.cols();
    VectorXd v(H * W);
    for (Eigen::Index i = 0; i < H; ++i)
        for (Eigen::Index j = 0; j < W; ++j) v[i * W + j] = img(i, j);
    return v;
}

MatrixXd unvec_image(const VectorXd& v, int H, int W) {
    if (v.size() != static_cast<Eigen::Index>(H) * W)
        throw input_error("unvec_image: length mismatch");
    MatrixXd img(H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) img(i, j) = v[static_cast<Eigen::Index>(i) * W + j];
    return img;
}

MatrixXd bilinear_resize(const MatrixXd& img, int outH, int outW) {
    if (outH < 1 || outW < 1) throw input_error("bilinear_resize: output dims must be >= 1");
    const int inH = static_cast<int>(img.rows()), inW = static_cast<int>(img.cols());
    if (inH < 1 || inW < 1) throw input_error("bilinear_resize: empty input");
    MatrixXd out(outH, outW);
    for (int i = 0; i < outH; ++i) {
        double fy = (i + 0.5) * static_cast<double>(inH) / outH - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(inH - 1));
        const int i0 = static_cast<int>(fy);
        const int i1 = std::min(i0 + 1, inH - 1);
        const double wy = fy - i0;
        for (int j = 0; j < outW; ++j) {
            double fx = (j + 0.5) * static_cast<double>(inW) / outW - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(inW - 1));
            const int j0 = static_cast<int>(fx);
            const int j1 = std::min(j0 + 1, inW - 1);
            const double wx = fx - j0;
            out(i, j) = (1.0 - wy) * ((1.0 - wx) * img(i0, j0) + wx * img(i0, j1)) +
                        wy * ((1.0 - wx) * img(i1, j0) + wx * img(i1, j1));
        }
    }
    return out;
}

MatrixXd haar2_forward(const MatrixXd& img) {
    require_pow2_dims(img, "haar2_forward");
    MatrixXd X = img;
    int h = static_cast<int>(X.rows()), w = static_cast<int>(X.cols());
    VectorXd buf(std::max(h, w));
    while (h >= 2 && w >= 2) {
        for (int i = 0; i < h; ++i) {
            buf.head(w) = X.row(i).head(w);
            haar_split(buf, w);
            X.row(i).head(w) = buf.head(w);
        }
        for (int j = 0; j < w; ++j) {
            buf.head(h) = X.col(j).head(h);
            haar_split(buf, h);
            X.col(j).head(h) = buf.head(h);
        }
        h /= 2;
        w /= 2;
    }
    return X;
}

MatrixXd haar2_inverse(const MatrixXd& coeffs) {
    require_pow2_dims(coeffs, "haar2_inverse");
    MatrixXd X = coeffs;
    const int H = static_cast<int>(X.rows()), W = static_cast<int>(X.cols());
    // Reconstruct the level sizes the forward pass visited, then undo them
    // deepest-first.
    std::vector<std::pair<int, int>> levels;
    for (int h = H, w = W; h >= 2 && w >= 2; h /= 2, w /= 2) levels.push_back({h, w});
    VectorXd buf(std::max(H, W));
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        const int h = it->first, w = it->second;
        for (int j = 0; j < w; ++j) {
            buf.head(h) = X.col(j).head(h);
            haar_merge(buf, h);
            X.col(j).head(h) = buf.head(h);
        }
        for (int i = 0; i < h; ++i) {
            buf.head(w) = X.row(i).head(w);
            haar_merge(buf, w);
            X.row(i).head(w) = buf.head(w);
        }
    }
    return X;
}

SparsifyResult sparsify_wavelet(const MatrixXd& img, double target_sparseness) {
    if (!(target_sparseness > 0.0) || target_sparseness > 1.0)
        throw input_error("sparsify_wavelet: target must be in (0, 1]");
    const MatrixXd C = haar2_forward(img);
    VectorXd c = vec_image(C);
    const Eigen::Index N = c.size();
    const long long keep = round_half_away(target_sparseness * static_cast<double>(N));
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&c](int lhs, int rhs) {
        return std::abs(c[lhs]) > std::abs(c[rhs]);
    });
    VectorXd kept = VectorXd::Zero(N);
    for (long long k = 0; k < keep && k < static_cast<long long>(N); ++k)
        kept[order[k]] = c[order[k]];
    SparsifyResult res;
    res.coeffs = kept;
    res.image = haar2_inverse(unvec_image(kept, static_cast<int>(img.rows()),
                                          static_cast<int>(img.cols())));
    return res;
}

SamplingMask make_mask(int H, int W, int M, std::uint64_t seed) {
    const long long N = static_cast<long long>(H) * W;
    if (H < 1 || W < 1) throw input_error("make_mask: dims must be >= 1");
    if (M < 1 || M > N) throw input_error("make_mask: M out of range");
    std::vector<int> pool(N);
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    for (int i = 0; i < M; ++i) {
        const auto pick = i + static_cast<long long>(rng.uniform_below(N - i));
        std::swap(pool[i], pool[pick]);
    }
    SamplingMask mask;
    mask.H = H;
    mask.W = W;
    mask.indices.assign(pool.begin(), pool.begin() + M);
    std::sort(mask.indices.begin(), mask.indices.end());
    return mask;
}

struct MriTransform::Plans {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    Plans(int H, int W) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        buf = fftw_alloc_complex(static_cast<size_t>(H) * W);
        fwd = fftw_plan_dft_2d(H, W, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(H, W, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Plans() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(buf);
    }
};

MriTransform::MriTransform(const MatrixXd& target_image, SamplingMask mask, double gamma)
    : H_(static_cast<int>(target_image.rows())),
      W_(static_cast<int>(target_image.cols())),
      gamma_(gamma),
      mask_(std::move(mask)) {
    require_pow2_dims(target_image, "MriTransform");
    if (mask_.H != H_ || mask_.W != W_) throw input_error("MriTransform: mask dims mismatch");
    if (gamma_ < 0.0) throw input_error("MriTransform: gamma must be >= 0");
    std::vector<int> sorted = mask_.indices;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || sorted.front() < 0 || sorted.back() >= H_ * W_ ||
        std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw input_error("MriTransform: mask indices must be unique and in range");
    mask_.indices = std::move(sorted);
    plans_ = std::make_unique<Plans>(H_, W_);

    // Observation: the target's k-space restricted to the mask.
    const MatrixXcd K = dft2(target_image);
    y_.resize(mask_.M());
    for (int m = 0; m < mask_.M(); ++m)
        y_[m] = K(mask_.indices[m] / W_, mask_.indices[m] % W_);
    hz_ = vec_image(haar2_forward(idft2_masked_real(y_)));

    // Diagonal of G, one basis vector at a time: ||A e_r||^2 plus the
    // smoothness energy of the r-th basis image.
    diag_.resize(N());
    VectorXd e = VectorXd::Zero(N());
    for (int r = 0; r < N(); ++r) {
        e[r] = 1.0;
        const MatrixXd B = haar2_inverse(unvec_image(e, H_, W_));
        e[r] = 0.0;
        const MatrixXcd Kb = dft2(B);
        double d = 0.0;
        for (int m = 0; m < mask_.M(); ++m)
            d += std::norm(Kb(mask_.indices[m] / W_, mask_.indices[m] % W_));
        if (gamma_ > 0.0)
            d += gamma_ * (second_diff_cols(B).squaredNorm() +
                           second_diff_rows(B).squaredNorm());
        diag_[r] = d;
    }
}

MriTransform::~MriTransform() = default;

MatrixXcd MriTransform::dft2(const MatrixXd& real_img) const {
    fftw_complex* buf = plans_->buf;
    for (int i = 0; i < H_; ++i)
        for (int j = 0; j < W_; ++j) {
            buf[static_cast<size_t>(i) * W_ + j][0] = real_img(i, j);
            buf[static_cast<size_t>(i) * W_ + j][1] = 0.0;
        }
    fftw_execute(plans_->fwd);
    const double scale = 1.0 / std::sqrt(static_cast<double>(H_) * W_);
    MatrixXcd out(H_, W_);
    for (int i = 0; i < H_; ++i)
        for (int j = 0; j < W_; ++j)
            out(i, j) = scale * std::complex<double>(buf[static_cast<size_t>(i) * W_ + j][0],
                                                     buf[static_cast<size_t>(i) * W_ + j][1]);
    return out;
}

MatrixXd MriTransform::idft2_masked_real(const VectorXcd& kvec) const {
    if (kvec.size() != mask_.M()) throw input_error("idft2_masked_real: length mismatch");
    fftw_complex* buf = plans_->buf;
    std::fill(&buf[0][0], &buf[0][0] + 2 * static_cast<size_t>(H_) * W_, 0.0);
    for (int m = 0; m < mask_.M(); ++m) {
        buf[mask_.indices[m]][0] = kvec[m].real();
        buf[mask_.indices[m]][1] = kvec[m].imag();
    }
    fftw_execute(plans_->bwd);
    const double scale = 1.0 / std::sqrt(static_cast<double>(H_) * W_);
    MatrixXd out(H_, W_);
    for (int i = 0; i < H_; ++i)
        for (int j = 0; j < W_; ++j) out(i, j) = scale * buf[static_cast<size_t>(i) * W_ + j][0];
    return out;
}

VectorXcd MriTransform::forward(const VectorXd& coeffs) const {
    if (coeffs.size() != N()) throw input_error("MriTransform::forward: length mismatch");
    const MatrixXcd K = dft2(haar2_inverse(unvec_image(coeffs, H_, W_)));
    VectorXcd out(mask_.M());
    for (int m = 0; m < mask_.M(); ++m)
        out[m] = K(mask_.indices[m] / W_, mask_.indices[m] % W_);
    return out;
}

VectorXd MriTransform::apply_fit(const VectorXd& coeffs) const {
    return vec_image(haar2_forward(idft2_masked_real(forward(coeffs))));
}

VectorXd MriTransform::apply_full(const VectorXd& coeffs) const {
    if (coeffs.size() != N()) throw input_error("MriTransform::apply_full: length mismatch");
    const MatrixXd B = haar2_inverse(unvec_image(coeffs, H_, W_));
    const MatrixXcd K = dft2(B);
    VectorXcd kv(mask_.M());
    for (int m = 0; m < mask_.M(); ++m)
        kv[m] = K(mask_.indices[m] / W_, mask_.indices[m] % W_);
    MatrixXd img = idft2_masked_real(kv);
    if (gamma_ > 0.0)
        img += gamma_ * (second_diff_cols(second_diff_cols(B)) +
                         second_diff_rows(second_diff_rows(B)));
    return vec_image(haar2_forward(img));
}

double MriTransform::fit_error(const VectorXd& coeffs) const {
    return 0.5 * (observed() - forward(coeffs)).squaredNorm();
}

MatrixXd MriOperators::coupling_zero_diag() const {
    MatrixXd C = -J;
    C.diagonal().setZero();
    return C;
}

MriOperators assemble_operators(const MatrixXd& target_image, const SamplingMask& mask,
                                double gamma) {
    MriTransform t(target_image, mask, gamma);
    MriOperators ops;
    ops.gamma = gamma;
    ops.mask = t.mask();
    ops.hz = t.hz();
    const int N = t.N();
    ops.J.resize(N, N);
    VectorXd e = VectorXd::Zero(N);
    for (int r = 0; r < N; ++r) {
        e[r] = 1.0;
        ops.J.col(r) = t.apply_full(e);
        e[r] = 0.0;
    }
    return ops;
}

VectorXd lasso_normal_form(const std::function<VectorXd(const VectorXd&)>& applyG,
                           const VectorXd& hz, const LassoOptions& opts) {
    if (opts.lambda_l1 < 0.0) throw input_error("lasso: lambda_l1 must be >= 0");
    if (!(opts.step > 0.0)) throw input_error("lasso: step must be > 0");
    const Eigen::Index N = hz.size();
    VectorXd x = VectorXd::Zero(N);
    VectorXd z = x;
    double t = 1.0;
    double f_prev = 0.0;
    for (int it = 0; it < opts.max_iters; ++it) {
        const VectorXd grad = applyG(z) - hz;
        const VectorXd x_next = soft_threshold(z - opts.step * grad, opts.step * opts.lambda_l1);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x_next + ((t - 1.0) / t_next) * (x_next - x);
        x = x_next;
        t = t_next;
        const double f =
            0.5 * x.dot(applyG(x)) - hz.dot(x) + opts.lambda_l1 * x.lpNorm<1>();
        if (std::abs(f - f_prev) <= opts.tol * std::max(1.0, std::abs(f_prev))) break;
        f_prev = f;
    }
    return x;
}

VectorXd lasso_init(const MriTransform& t, double lambda_l1) {
    LassoOptions opts;
    opts.lambda_l1 = lambda_l1;
    return lasso_normal_form([&t](const VectorXd& v) { return t.apply_fit(v); }, t.hz(),
                             opts);
}

VectorXd lasso_init(const MatrixXd& A, const VectorXd& y, double lambda_l1) {
    if (A.rows() != y.size()) throw input_error("lasso_init: A/y shape mismatch");
    const MatrixXd G = A.transpose() * A;
    const VectorXd hz = A.transpose() * y;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    const double lmax = es.eigenvalues().maxCoeff();
    LassoOptions opts;
    opts.lambda_l1 = lambda_l1;
    opts.step = lmax > 0.0 ? 1.0 / lmax : 1.0;
    return lasso_normal_form([&G](const VectorXd& v) -> VectorXd { return G * v; }, hz,
                             opts);
}

SolverProblem make_problem(std::shared_ptr<const MriTransform> t,
                           const VectorXd* truth_coeffs) {
    if (!t) throw input_error("make_problem: null transform");
    SolverProblem prob = make_problem(
        t->N(), [t](const VectorXd& w) -> VectorXd { return t->apply_full(w); }, t->diag(),
        t->hz());
    if (truth_coeffs) {
        if (truth_coeffs->size() != t->N())
            throw input_error("make_problem: truth length mismatch");
        prob.has_truth = true;
        prob.x_true = *truth_coeffs;
        prob.xi_true.resize(t->N());
        for (int r = 0; r < t->N(); ++r) prob.xi_true[r] = (*truth_coeffs)[r] != 0.0 ? 1 : 0;
    }
    return prob;
}

MatrixXd phantom_image(int H, int W) {
    if (H < 1 || W < 1) throw input_error("phantom_image: dims must be >= 1");
    MatrixXd img(H, W);
    for (int i = 0; i < H; ++i) {
        const double v = (i + 0.5) / H;
        for (int j = 0; j < W; ++j) {
            const double u = (j + 0.5) / W;
            double val = 0.08 + 0.10 * u;
            val += 0.55 * std::exp(-((u - 0.35) * (u - 0.35) + (v - 0.40) * (v - 0.40)) / 0.020);
            val += 0.40 * std::exp(-((u - 0.72) * (u - 0.72) + (v - 0.68) * (v - 0.68)) / 0.008);
            if (u > 0.55 && u < 0.88 && v > 0.12 && v < 0.34) val += 0.30;
            if ((u - 0.28) * (u - 0.28) + (v - 0.78) * (v - 0.78) < 0.016) val += 0.35;
            img(i, j) = std::min(std::max(val, 0.0), 1.0);
        }
    }
    return img;
}

}  // namespace cimcs
