#pragma once

// Dense linear algebra for small multipartite quantum systems (total
// dimension <= 16 in practice).  Eigen supplies the matrix engine; the
// functions here add the tensor-product bookkeeping.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <vector>

namespace superswap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Dims = std::vector<Eigen::Index>;

class DensityMatrix;

/// Pure state over an ordered tensor product of finite subsystems.
/// Amplitudes are stored row-major in the subsystem indices: the last
/// subsystem varies fastest.
class StateVector {
 public:
  StateVector(Vector amplitudes, Dims dims);

  const Vector& amplitudes() const { return amps_; }
  const Dims& dims() const { return dims_; }
  Eigen::Index size() const { return amps_.size(); }

  double norm() const { return amps_.norm(); }
  double squared_norm() const { return amps_.squaredNorm(); }

  /// Unit-norm copy; throws on (near-)zero norm.
  StateVector normalized() const;

  /// <this|other>; dimensions must match.
  Complex overlap(const StateVector& other) const;

  /// |psi><psi| with the same subsystem structure.
  DensityMatrix projector() const;

 private:
  Vector amps_;
  Dims dims_;
};

/// Mixed (possibly sub-normalized) state.  Construction enforces
/// hermiticity, positivity down to -1e-10, and trace <= 1 + 1e-12.
class DensityMatrix {
 public:
  DensityMatrix(Matrix m, Dims dims);

  const Matrix& matrix() const { return m_; }
  const Dims& dims() const { return dims_; }
  Eigen::Index size() const { return m_.rows(); }

  double trace_real() const { return m_.trace().real(); }

  /// Unit-trace copy; throws if the trace is (near-)zero.
  DensityMatrix normalized() const;

 private:
  Matrix m_;
  Dims dims_;
};

/// Kronecker product of two dense expressions.
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a,
          const Eigen::MatrixBase<DerivedB>& b) {
  using ScalarA = typename DerivedA::Scalar;
  using ScalarB = typename DerivedB::Scalar;
  using Scalar = decltype(ScalarA() * ScalarB());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
      a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Tensor product of states; subsystem lists concatenate.
StateVector kron(const StateVector& a, const StateVector& b);

/// Product basis ket |idx[0], idx[1], ...> for the given dims.
StateVector basis_state(const Dims& dims, const std::vector<int>& idx);

/// Trace out every subsystem not listed in `keep` (ascending, no
/// duplicates).  The result keeps the listed subsystems in their
/// original order.
DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& keep);

/// Reorder subsystems: slot k of the result is subsystem order[k] of the
/// input.  `order` must be a permutation of 0..n-1.
StateVector permute_subsystems(const StateVector& s,
                               const std::vector<int>& order);

/// Embed a one-subsystem operator into the full space (identity
/// elsewhere).
Matrix lift_operator(const Matrix& op, const Dims& dims, int subsystem);

/// Apply a one-subsystem operator without forming the lifted matrix.
StateVector apply_local(const StateVector& s, const Matrix& op,
                        int subsystem);

/// exp(scale * m).  Normal operators go through the eigendecomposition;
/// everything else through a scaled-and-squared Taylor series.
Matrix expm(const Matrix& m, Complex scale = Complex(1.0, 0.0));

/// Eigenvalues of a real symmetric 3x3 matrix, descending.
Eigen::Vector3d eig_sym(const Eigen::Matrix3d& m);

struct SymEig {
  Eigen::Vector3d values;   // descending
  Eigen::Matrix3d vectors;  // columns match values
};

/// Eigendecomposition of a real symmetric 3x3 matrix, descending.
SymEig eig_sym_full(const Eigen::Matrix3d& m);

/// (1/2) * trace norm of (a - b); both arguments should be normalized.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();

/// Pauli matrix by axis index: 0 = x, 1 = y, 2 = z.
Matrix pauli(int axis);

}  // namespace superswap
