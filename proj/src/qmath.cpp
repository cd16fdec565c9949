#include "superswap/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace superswap {

namespace {

Eigen::Index total_dim(const Dims& dims) {
  Eigen::Index total = 1;
  for (Eigen::Index d : dims) {
    if (d < 1) throw std::invalid_argument("qmath: subsystem dim < 1");
    total *= d;
  }
  return total;
}

// Row-major strides: the last subsystem varies fastest.
std::vector<Eigen::Index> strides_of(const Dims& dims) {
  std::vector<Eigen::Index> strides(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    strides[k] = strides[k + 1] * dims[k + 1];
  return strides;
}

void decompose(Eigen::Index flat, const Dims& dims,
               const std::vector<Eigen::Index>& strides,
               std::vector<Eigen::Index>& out) {
  for (std::size_t k = 0; k < dims.size(); ++k) {
    out[k] = flat / strides[k];
    flat %= strides[k];
  }
}

double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

StateVector::StateVector(Vector amplitudes, Dims dims)
    : amps_(std::move(amplitudes)), dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("StateVector: empty dims");
  if (total_dim(dims_) != amps_.size())
    throw std::invalid_argument("StateVector: dims do not match amplitude count");
}

StateVector StateVector::normalized() const {
  const double n = norm();
  if (n < 1e-300) throw std::domain_error("StateVector: cannot normalize zero state");
  return StateVector(amps_ / n, dims_);
}

Complex StateVector::overlap(const StateVector& other) const {
  if (other.size() != size())
    throw std::invalid_argument("StateVector: overlap dimension mismatch");
  return amps_.dot(other.amps_);  // Eigen's dot conjugates the left factor
}

DensityMatrix StateVector::projector() const {
  return DensityMatrix(amps_ * amps_.adjoint(), dims_);
}

DensityMatrix::DensityMatrix(Matrix m, Dims dims)
    : m_(std::move(m)), dims_(std::move(dims)) {
  if (m_.rows() != m_.cols())
    throw std::invalid_argument("DensityMatrix: matrix not square");
  if (dims_.empty() || total_dim(dims_) != m_.rows())
    throw std::invalid_argument("DensityMatrix: dims do not match matrix size");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("DensityMatrix: matrix not hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  const double tr = trace_real();
  if (tr < -1e-12 || tr > 1.0 + 1e-12)
    throw std::invalid_argument("DensityMatrix: trace outside [0, 1]");
}

DensityMatrix DensityMatrix::normalized() const {
  const double tr = trace_real();
  if (tr < 1e-300) throw std::domain_error("DensityMatrix: cannot normalize zero trace");
  return DensityMatrix(m_ / tr, dims_);
}

StateVector kron(const StateVector& a, const StateVector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a.amplitudes()(i) * b.amplitudes();
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return StateVector(std::move(out), std::move(dims));
}

StateVector basis_state(const Dims& dims, const std::vector<int>& idx) {
  if (idx.size() != dims.size())
    throw std::invalid_argument("basis_state: index count does not match dims");
  const auto strides = strides_of(dims);
  Eigen::Index flat = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= dims[k])
      throw std::invalid_argument("basis_state: index out of range");
    flat += idx[k] * strides[k];
  }
  Vector amps = Vector::Zero(total_dim(dims));
  amps(flat) = 1.0;
  return StateVector(std::move(amps), dims);
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& keep) {
  const Dims& dims = rho.dims();
  const int n = static_cast<int>(dims.size());
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep list empty");
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] < 0 || keep[k] >= n)
      throw std::invalid_argument("partial_trace: subsystem index out of range");
    if (k > 0 && keep[k] <= keep[k - 1])
      throw std::invalid_argument("partial_trace: keep list must be ascending");
  }

  Dims out_dims;
  for (int k : keep) out_dims.push_back(dims[k]);
  Matrix out = Matrix::Zero(total_dim(out_dims), total_dim(out_dims));

  const auto strides = strides_of(dims);
  const auto out_strides = strides_of(out_dims);
  const Eigen::Index dim = rho.size();
  std::vector<Eigen::Index> ri(dims.size()), ci(dims.size());
  std::vector<char> kept(dims.size(), 0);
  for (int k : keep) kept[k] = 1;

  for (Eigen::Index r = 0; r < dim; ++r) {
    decompose(r, dims, strides, ri);
    for (Eigen::Index c = 0; c < dim; ++c) {
      decompose(c, dims, strides, ci);
      bool diagonal_in_traced = true;
      for (int k = 0; k < n; ++k)
        if (!kept[k] && ri[k] != ci[k]) { diagonal_in_traced = false; break; }
      if (!diagonal_in_traced) continue;
      Eigen::Index ro = 0, co = 0;
      for (std::size_t k = 0; k < keep.size(); ++k) {
        ro += ri[keep[k]] * out_strides[k];
        co += ci[keep[k]] * out_strides[k];
      }
      out(ro, co) += rho.matrix()(r, c);
    }
  }
  return DensityMatrix(std::move(out), std::move(out_dims));
}

StateVector permute_subsystems(const StateVector& s,
                               const std::vector<int>& order) {
  const Dims& dims = s.dims();
  const int n = static_cast<int>(dims.size());
  if (static_cast<int>(order.size()) != n)
    throw std::invalid_argument("permute_subsystems: order size mismatch");
  std::vector<char> seen(n, 0);
  for (int k : order) {
    if (k < 0 || k >= n || seen[k])
      throw std::invalid_argument("permute_subsystems: not a permutation");
    seen[k] = 1;
  }

  Dims out_dims(n);
  for (int k = 0; k < n; ++k) out_dims[k] = dims[order[k]];
  const auto strides = strides_of(dims);
  const auto out_strides = strides_of(out_dims);

  Vector out(s.size());
  std::vector<Eigen::Index> idx(n);
  for (Eigen::Index flat = 0; flat < s.size(); ++flat) {
    decompose(flat, dims, strides, idx);
    Eigen::Index target = 0;
    for (int k = 0; k < n; ++k) target += idx[order[k]] * out_strides[k];
    out(target) = s.amplitudes()(flat);
  }
  return StateVector(std::move(out), std::move(out_dims));
}

Matrix lift_operator(const Matrix& op, const Dims& dims, int subsystem) {
  const int n = static_cast<int>(dims.size());
  if (subsystem < 0 || subsystem >= n)
    throw std::invalid_argument("lift_operator: subsystem out of range");
  if (op.rows() != op.cols() || op.rows() != dims[subsystem])
    throw std::invalid_argument("lift_operator: operator does not fit subsystem");
  Matrix out = Matrix::Identity(1, 1);
  for (int k = 0; k < n; ++k) {
    if (k == subsystem)
      out = kron(out, op);
    else
      out = kron(out, Matrix(Matrix::Identity(dims[k], dims[k])));
  }
  return out;
}

StateVector apply_local(const StateVector& s, const Matrix& op,
                        int subsystem) {
  const Dims& dims = s.dims();
  const int n = static_cast<int>(dims.size());
  if (subsystem < 0 || subsystem >= n)
    throw std::invalid_argument("apply_local: subsystem out of range");
  const Eigen::Index d = dims[subsystem];
  if (op.rows() != d || op.cols() != d)
    throw std::invalid_argument("apply_local: operator does not fit subsystem");

  Eigen::Index right = 1;
  for (int k = subsystem + 1; k < n; ++k) right *= dims[k];
  const Eigen::Index left = s.size() / (d * right);

  Vector out = Vector::Zero(s.size());
  for (Eigen::Index l = 0; l < left; ++l) {
    const Eigen::Index base = l * d * right;
    for (Eigen::Index r = 0; r < right; ++r)
      for (Eigen::Index a = 0; a < d; ++a) {
        Complex acc = 0.0;
        for (Eigen::Index b = 0; b < d; ++b)
          acc += op(a, b) * s.amplitudes()(base + b * right + r);
        out(base + a * right + r) = acc;
      }
  }
  return StateVector(std::move(out), dims);
}

Matrix expm(const Matrix& m, Complex scale) {
  if (m.rows() != m.cols()) throw std::invalid_argument("expm: matrix not square");
  const Eigen::Index n = m.rows();
  Matrix a = scale * m;
  const double anorm = inf_norm(a);

  // Normal operators (includes hermitian/anti-hermitian): diagonalize.
  const Matrix comm = a * a.adjoint() - a.adjoint() * a;
  if (comm.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, anorm * anorm)) {
    Eigen::ComplexEigenSolver<Matrix> es(a);
    if (es.info() == Eigen::Success) {
      Matrix expd = es.eigenvalues().array().exp().matrix().asDiagonal();
      return es.eigenvectors() * expd * es.eigenvectors().inverse();
    }
  }

  // Scaling and squaring with a truncated Taylor series.
  int squarings = 0;
  double theta = anorm;
  while (theta > 0.5 && squarings < 60) {
    theta *= 0.5;
    ++squarings;
  }
  Matrix b = a / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(n, n);
  Matrix sum = term;
  for (int k = 1; k <= 60; ++k) {
    term = (term * b) / static_cast<double>(k);
    sum += term;
    if (inf_norm(term) <= 1e-18 * std::max(1.0, inf_norm(sum))) break;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

SymEig eig_sym_full(const Eigen::Matrix3d& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("eig_sym: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (m + m.transpose()));
  SymEig r;
  for (int k = 0; k < 3; ++k) {
    r.values(k) = es.eigenvalues()(2 - k);
    r.vectors.col(k) = es.eigenvectors().col(2 - k);
  }
  return r;
}

Eigen::Vector3d eig_sym(const Eigen::Matrix3d& m) {
  return eig_sym_full(m).values;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  Matrix d = a.matrix() - b.matrix();
  d = 0.5 * (d + Matrix(d.adjoint()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Matrix sigma_x() {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

Matrix sigma_y() {
  Matrix s(2, 2);
  s << 0, Complex(0, -1), Complex(0, 1), 0;
  return s;
}

Matrix sigma_z() {
  Matrix s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

Matrix pauli(int axis) {
  switch (axis) {
    case 0: return sigma_x();
    case 1: return sigma_y();
    case 2: return sigma_z();
    default: throw std::invalid_argument("pauli: axis must be 0, 1, or 2");
  }
}

}  // namespace superswap
