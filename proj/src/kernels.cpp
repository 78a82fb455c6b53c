#include "aderlts/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace aderlts {

namespace {

template <typename Dst, typename Src>
void assign_checked(Dst& dst, const Src& src, int zr0, int znr, int zc0, int znc, const char* what) {
  dst = src.template cast<typename Dst::Scalar>();
  if (znr > 0 && src.block(zr0, zc0, znr, znc).cwiseAbs().maxCoeff() != 0.0)
    throw AssemblyError(std::string("unexpected nonzero block in ") + what);
}

template <typename Real>
std::vector<Real>& scratch(int slot, std::size_t size) {
  thread_local std::array<std::vector<Real>, 4> buffers;
  auto& b = buffers[slot];
  if (b.size() < size) b.resize(size);
  return b;
}

}  // namespace

template <typename Real>
KernelElementOps<Real> KernelElementOps<Real>::convert(const ElementOperators& op) {
  KernelElementOps<Real> out;
  for (int c = 0; c < 3; ++c) {
    assign_checked(out.star_e[c], op.star_e[c], 0, 6, 0, 6, "elastic Jacobian");
    if (op.star_e[c].block(6, 6, 3, 3).cwiseAbs().maxCoeff() != 0.0)
      throw AssemblyError("unexpected nonzero block in elastic Jacobian");
    assign_checked(out.star_a[c], op.star_a[c], 0, 6, 0, 6, "anelastic Jacobian");
  }
  for (const auto& e : op.coupling) {
    out.coupling.emplace_back();
    assign_checked(out.coupling.back(), e, 6, 3, 0, 6, "coupling block");
  }
  for (int i = 0; i < 4; ++i) {
    out.flux_minus_e[i] = op.flux_minus_e[i].cast<Real>();
    out.flux_plus_e[i] = op.flux_plus_e[i].cast<Real>();
    out.flux_minus_a[i] = op.flux_minus_a[i].cast<Real>();
    out.flux_plus_a[i] = op.flux_plus_a[i].cast<Real>();
  }
  return out;
}

template <typename Real>
KernelSet<Real>::KernelSet(const ReferenceMatrices& ref, std::vector<double> omega, int width, KernelPath path)
    : order_(ref.info.order),
      nb_(ref.info.nb3d),
      nf_(ref.info.nb2d),
      w_(width),
      nq_(num_quantities(static_cast<int>(omega.size()))),
      path_(path) {
  if (width < 1) throw ParameterError("fusion width must be >= 1");
  if (path_ == KernelPath::kAuto) path_ = width == 1 ? KernelPath::kDense : KernelPath::kSparse;
  for (double o : omega) omega_.push_back(static_cast<Real>(o));
  for (int c = 0; c < 3; ++c) {
    ck_[c] = make_ref(ref.stiffness[c].transpose());
    vol_[c] = make_ref(ref.stiffness[c]);
  }
  for (int i = 0; i < 4; ++i) {
    trace_[i] = make_ref(ref.flux_local[i]);
    lift_[i] = make_ref(ref.flux_transposed[i]);
  }
  for (int i = 0; i < 12; ++i) neigh_[i] = make_ref(ref.flux_neighbor[i]);
}

template <typename Real>
typename KernelSet<Real>::RefOp KernelSet<Real>::make_ref(const Eigen::MatrixXd& right) const {
  RefOp r;
  r.right = right.cast<Real>();
  r.right_t = r.right.transpose();
  r.csr.row_start.push_back(0);
  for (int o = 0; o < r.right_t.rows(); ++o) {
    for (int i = 0; i < r.right_t.cols(); ++i)
      if (r.right_t(o, i) != Real(0)) {
        r.csr.col.push_back(i);
        r.csr.val.push_back(r.right_t(o, i));
      }
    r.csr.row_start.push_back(static_cast<int>(r.csr.col.size()));
  }
  return r;
}

template <typename Real>
void KernelSet<Real>::ref_product(const Real* in, int rows, const RefOp& r, Real* out) const {
  const int n_in = static_cast<int>(r.right.rows());
  const int n_out = static_cast<int>(r.right.cols());
  if (path_ == KernelPath::kSparse) {
    for (int p = 0; p < rows; ++p) {
      const Real* x = in + static_cast<std::size_t>(p) * n_in * w_;
      Real* y = out + static_cast<std::size_t>(p) * n_out * w_;
      for (int o = 0; o < n_out; ++o) {
        Real* yo = y + static_cast<std::size_t>(o) * w_;
        for (int e = r.csr.row_start[o]; e < r.csr.row_start[o + 1]; ++e) {
          const Real v = r.csr.val[e];
          const Real* xi = x + static_cast<std::size_t>(r.csr.col[e]) * w_;
          for (int s = 0; s < w_; ++s) yo[s] += v * xi[s];
        }
      }
    }
    return;
  }
  if (w_ == 1) {
    Eigen::Map<const MatR> x(in, rows, n_in);
    Eigen::Map<MatR> y(out, rows, n_out);
    y.noalias() += x * r.right;
    return;
  }
  for (int p = 0; p < rows; ++p) {
    Eigen::Map<const MatR> x(in + static_cast<std::size_t>(p) * n_in * w_, n_in, w_);
    Eigen::Map<MatR> y(out + static_cast<std::size_t>(p) * n_out * w_, n_out, w_);
    y.noalias() += r.right_t * x;
  }
}

template <typename Real>
template <typename Mat>
void KernelSet<Real>::star_product(const Mat& s, int r0, int nr, int c0, int nc, const Real* in, int len,
                                   Real* out) const {
  Eigen::Map<const MatR> x(in + static_cast<std::size_t>(c0) * len, nc, len);
  Eigen::Map<MatR> y(out + static_cast<std::size_t>(r0) * len, nr, len);
  y.noalias() += s.block(r0, c0, nr, nc) * x;
}

template <typename Real>
void KernelSet<Real>::ck_derivatives(std::span<const Real> q, const KernelElementOps<Real>& op,
                                     std::span<Real> derivs) const {
  const std::size_t ns = state_size();
  const int len = nb_ * w_;
  const std::size_t ne = elastic_size();
  const int m = mechanisms();
  std::fill(derivs.begin(), derivs.begin() + derivative_size(), Real(0));
  std::copy(q.begin(), q.begin() + ns, derivs.begin());
  auto& grad = scratch<Real>(0, 3 * ne);
  auto& sum_a = scratch<Real>(1, 6 * static_cast<std::size_t>(len));
  for (int j = 0; j + 1 < order_; ++j) {
    const Real* d = derivs.data() + j * ns;
    Real* next = derivs.data() + (j + 1) * ns;
    // Reference-space gradients of the elastic part, shared by both updates.
    std::fill(grad.begin(), grad.begin() + 3 * ne, Real(0));
    for (int c = 0; c < 3; ++c) ref_product(d, kElasticVars, ck_[c], grad.data() + c * ne);
    for (int c = 0; c < 3; ++c) {
      const Real* g = grad.data() + c * ne;
      star_product(-op.star_e[c], 0, 6, 6, 3, g, len, next);
      star_product(-op.star_e[c], 6, 3, 0, 6, g, len, next);
    }
    if (m == 0) continue;
    std::fill(sum_a.begin(), sum_a.begin() + 6 * len, Real(0));
    for (int c = 0; c < 3; ++c) star_product(op.star_a[c], 0, 6, 6, 3, grad.data() + c * ne, len, sum_a.data());
    for (int l = 0; l < m; ++l) {
      const Real* da = d + ne + static_cast<std::size_t>(6 * l) * len;
      Real* na = next + ne + static_cast<std::size_t>(6 * l) * len;
      star_product(op.coupling[l], 0, 6, 0, 6, da, len, next);
      const Real w = omega_[l];
      for (int i = 0; i < 6 * len; ++i) na[i] = -w * (sum_a[i] + da[i]);
    }
  }
}

template <typename Real>
void KernelSet<Real>::taylor_integrate(std::span<const Real> derivs, double dt, int rows, std::span<Real> out) const {
  const std::size_t ns = state_size();
  const std::size_t n = static_cast<std::size_t>(rows) * nb_ * w_;
  std::fill(out.begin(), out.begin() + n, Real(0));
  double factor = dt;
  for (int d = 0; d < order_; ++d) {
    const Real f = static_cast<Real>(factor);
    const Real* src = derivs.data() + d * ns;
    for (std::size_t i = 0; i < n; ++i) out[i] += f * src[i];
    factor *= dt / (d + 2);
  }
}

template <typename Real>
void KernelSet<Real>::taylor_evaluate(std::span<const Real> derivs, double tau, std::span<Real> out) const {
  const std::size_t ns = state_size();
  std::fill(out.begin(), out.begin() + ns, Real(0));
  double factor = 1.0;
  for (int d = 0; d < order_; ++d) {
    const Real f = static_cast<Real>(factor);
    const Real* src = derivs.data() + d * ns;
    for (std::size_t i = 0; i < ns; ++i) out[i] += f * src[i];
    factor *= tau / (d + 1);
  }
}

template <typename Real>
void KernelSet<Real>::volume(std::span<const Real> t, const KernelElementOps<Real>& op, std::span<Real> out) const {
  const int len = nb_ * w_;
  const std::size_t ne = elastic_size();
  const int m = mechanisms();
  auto& grad = scratch<Real>(0, 3 * ne);
  std::fill(grad.begin(), grad.begin() + 3 * ne, Real(0));
  for (int c = 0; c < 3; ++c) ref_product(t.data(), kElasticVars, vol_[c], grad.data() + c * ne);
  for (int c = 0; c < 3; ++c) {
    const Real* g = grad.data() + c * ne;
    star_product(op.star_e[c], 0, 6, 6, 3, g, len, out.data());
    star_product(op.star_e[c], 6, 3, 0, 6, g, len, out.data());
  }
  if (m == 0) return;
  auto& sum_a = scratch<Real>(1, 6 * static_cast<std::size_t>(len));
  std::fill(sum_a.begin(), sum_a.begin() + 6 * len, Real(0));
  for (int c = 0; c < 3; ++c) star_product(op.star_a[c], 0, 6, 6, 3, grad.data() + c * ne, len, sum_a.data());
  for (int l = 0; l < m; ++l) {
    const Real* ta = t.data() + ne + static_cast<std::size_t>(6 * l) * len;
    Real* va = out.data() + ne + static_cast<std::size_t>(6 * l) * len;
    star_product(op.coupling[l], 0, 6, 0, 6, ta, len, out.data());
    const Real w = omega_[l];
    for (int i = 0; i < 6 * len; ++i) va[i] += w * (sum_a[i] - ta[i]);
  }
}

template <typename Real>
void KernelSet<Real>::surface_local(std::span<const Real> t, const KernelElementOps<Real>& op,
                                    std::span<Real> out) const {
  const int flen = nf_ * w_;
  const int len = nb_ * w_;
  const std::size_t np = payload_size();
  const int m = mechanisms();
  auto& face = scratch<Real>(0, np);
  auto& flux = scratch<Real>(1, np);
  auto& sum_a = scratch<Real>(2, 6 * static_cast<std::size_t>(len));
  if (m > 0) std::fill(sum_a.begin(), sum_a.begin() + 6 * len, Real(0));
  for (int i = 0; i < 4; ++i) {
    std::fill(face.begin(), face.begin() + np, Real(0));
    ref_product(t.data(), kElasticVars, trace_[i], face.data());
    std::fill(flux.begin(), flux.begin() + np, Real(0));
    star_product(op.flux_minus_e[i], 0, 9, 0, 9, face.data(), flen, flux.data());
    ref_product(flux.data(), kElasticVars, lift_[i], out.data());
    if (m == 0) continue;
    std::fill(flux.begin(), flux.begin() + 6 * flen, Real(0));
    star_product(op.flux_minus_a[i], 0, 6, 0, 9, face.data(), flen, flux.data());
    ref_product(flux.data(), 6, lift_[i], sum_a.data());
  }
  const std::size_t ne = elastic_size();
  for (int l = 0; l < m; ++l) {
    Real* sa = out.data() + ne + static_cast<std::size_t>(6 * l) * len;
    const Real w = omega_[l];
    for (int i = 0; i < 6 * len; ++i) sa[i] += w * sum_a[i];
  }
}

template <typename Real>
void KernelSet<Real>::face_payload(std::span<const Real> buffer, int j, int h, std::span<Real> payload) const {
  if (j < 0 || j > 3 || h < 1 || h > 3) throw ParameterError("invalid neighbour face or orientation");
  ref_product(buffer.data(), kElasticVars, neigh_[3 * j + h - 1], payload.data());
}

template <typename Real>
void KernelSet<Real>::surface_neighbor(int face, std::span<const Real> payload, const KernelElementOps<Real>& op,
                                       std::span<Real> out) const {
  const int flen = nf_ * w_;
  const int len = nb_ * w_;
  const std::size_t np = payload_size();
  const int m = mechanisms();
  auto& flux = scratch<Real>(1, np);
  std::fill(flux.begin(), flux.begin() + np, Real(0));
  star_product(op.flux_plus_e[face], 0, 9, 0, 9, payload.data(), flen, flux.data());
  ref_product(flux.data(), kElasticVars, lift_[face], out.data());
  if (m == 0) return;
  auto& sum_a = scratch<Real>(2, 6 * static_cast<std::size_t>(len));
  std::fill(sum_a.begin(), sum_a.begin() + 6 * len, Real(0));
  std::fill(flux.begin(), flux.begin() + 6 * flen, Real(0));
  star_product(op.flux_plus_a[face], 0, 6, 0, 9, payload.data(), flen, flux.data());
  ref_product(flux.data(), 6, lift_[face], sum_a.data());
  const std::size_t ne = elastic_size();
  for (int l = 0; l < m; ++l) {
    Real* sa = out.data() + ne + static_cast<std::size_t>(6 * l) * len;
    const Real w = omega_[l];
    for (int i = 0; i < 6 * len; ++i) sa[i] += w * sum_a[i];
  }
}

template struct KernelElementOps<float>;
template struct KernelElementOps<double>;
template class KernelSet<float>;
template class KernelSet<double>;

}  // namespace aderlts
