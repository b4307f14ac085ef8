#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace scmpc {

enum class ConeKind {
  kNonnegative,         // s >= 0 componentwise
  kSecondOrder,         // s_0 >= ||s_{1:}||
  kRotatedSecondOrder,  // 2 s_0 s_1 >= ||s_{2:}||^2, s_0, s_1 >= 0
};

struct ConeBlock {
  ConeKind kind = ConeKind::kNonnegative;
  int size = 0;
};

/// A contiguous, named group of decision variables.
struct NamedSlice {
  std::string name;
  int offset = 0;
  int length = 0;
};

/// Standard-form cone program
///
///   minimize c'x  subject to  s = b - A x,  s in K = K_1 x ... x K_p
///
/// where the cone blocks partition the rows of A in order. var_map names
/// slices of x for callers that lower structured problems into this form.
struct ConicProgram {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<ConeBlock> cones;
  std::vector<NamedSlice> var_map;

  int num_variables() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }

  /// Slice by name, or nullptr.
  const NamedSlice* find(const std::string& name) const;

  /// Throws DimensionMismatch / ConfigError when shapes, cone sizes or
  /// slices are inconsistent (cone sizes must sum to the row count, slices
  /// must be disjoint and in range).
  void validate() const;
};

/// Plain-text dump: header counts, cone list (l | q | r with size), then
/// triplet lists for c, b and A, then the named slices. Values use 17
/// significant digits so a dump reads back bit-exactly.
///
///   scmpc-conic-program 1
///   variables <n>
///   rows <m>
///   cones <k>
///   <l|q|r> <size>          (k lines)
///   c <nnz>
///   <index> <value>         (nnz lines)
///   b <nnz>
///   <row> <value>
///   A <nnz>
///   <row> <col> <value>
///   slices <k>
///   <name> <offset> <length>
///   end
void write_program_text(std::ostream& out, const ConicProgram& program);
ConicProgram read_program_text(std::istream& in);

}  // namespace scmpc
