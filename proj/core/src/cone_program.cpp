#include "scmpc/cone_program.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>

#include "scmpc/errors.hpp"

namespace scmpc {

const NamedSlice* ConicProgram::find(const std::string& name) const {
  for (const auto& s : var_map) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void ConicProgram::validate() const {
  const int n = num_variables();
  const int m = num_rows();
  if (n < 1) throw DimensionMismatch("conic program has no variables");
  if (A.rows() != m || A.cols() != n) throw DimensionMismatch("A does not match c and b");
  int total = 0;
  for (const auto& cone : cones) {
    if (cone.size < 1) throw ConfigError("cone block of size < 1");
    if (cone.kind == ConeKind::kRotatedSecondOrder && cone.size < 2) {
      throw ConfigError("rotated second-order cone needs size >= 2");
    }
    total += cone.size;
  }
  if (total != m) throw DimensionMismatch("cone sizes do not sum to the row count");
  std::vector<std::pair<int, int>> spans;
  for (const auto& s : var_map) {
    if (s.offset < 0 || s.length < 0 || s.offset + s.length > n) throw ConfigError("slice '" + s.name + "' out of range");
    if (s.length > 0) spans.emplace_back(s.offset, s.offset + s.length);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t k = 1; k < spans.size(); ++k) {
    if (spans[k].first < spans[k - 1].second) throw ConfigError("variable slices overlap");
  }
  if (!c.allFinite() || !b.allFinite()) throw ConfigError("non-finite program data");
}

void write_program_text(std::ostream& out, const ConicProgram& program) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "scmpc-conic-program 1\n";
  out << "variables " << program.num_variables() << "\n";
  out << "rows " << program.num_rows() << "\n";
  out << "cones " << program.cones.size() << "\n";
  for (const auto& cone : program.cones) {
    const char tag = cone.kind == ConeKind::kNonnegative ? 'l' : cone.kind == ConeKind::kSecondOrder ? 'q' : 'r';
    out << tag << ' ' << cone.size << "\n";
  }
  auto write_vector = [&](char tag, const Eigen::VectorXd& v) {
    int nnz = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) nnz += v(i) != 0.0;
    out << tag << ' ' << nnz << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v(i) != 0.0) out << i << ' ' << v(i) << "\n";
    }
  };
  write_vector('c', program.c);
  write_vector('b', program.b);
  out << "A " << program.A.nonZeros() << "\n";
  for (int col = 0; col < program.A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(program.A, col); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << "\n";
    }
  }
  out << "slices " << program.var_map.size() << "\n";
  for (const auto& s : program.var_map) out << s.name << ' ' << s.offset << ' ' << s.length << "\n";
  out << "end\n";
  out.precision(old_precision);
}

ConicProgram read_program_text(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw ConfigError("program text: expected '" + word + "'");
  };
  auto read_int = [&]() {
    long long v = 0;
    if (!(in >> v)) throw ConfigError("program text: expected an integer");
    return v;
  };
  auto read_double = [&]() {
    double v = 0.0;
    if (!(in >> v)) throw ConfigError("program text: expected a number");
    return v;
  };

  expect("scmpc-conic-program");
  if (read_int() != 1) throw ConfigError("program text: unsupported version");
  ConicProgram p;
  expect("variables");
  const auto n = read_int();
  expect("rows");
  const auto m = read_int();
  expect("cones");
  const auto k = read_int();
  for (long long i = 0; i < k; ++i) {
    std::string tag;
    in >> tag;
    ConeBlock cone;
    if (tag == "l") {
      cone.kind = ConeKind::kNonnegative;
    } else if (tag == "q") {
      cone.kind = ConeKind::kSecondOrder;
    } else if (tag == "r") {
      cone.kind = ConeKind::kRotatedSecondOrder;
    } else {
      throw ConfigError("program text: unknown cone tag '" + tag + "'");
    }
    cone.size = static_cast<int>(read_int());
    p.cones.push_back(cone);
  }
  p.c = Eigen::VectorXd::Zero(n);
  p.b = Eigen::VectorXd::Zero(m);
  expect("c");
  for (long long i = 0, nnz = read_int(); i < nnz; ++i) {
    const auto idx = read_int();
    p.c(idx) = read_double();
  }
  expect("b");
  for (long long i = 0, nnz = read_int(); i < nnz; ++i) {
    const auto idx = read_int();
    p.b(idx) = read_double();
  }
  expect("A");
  std::vector<Eigen::Triplet<double>> trips;
  for (long long i = 0, nnz = read_int(); i < nnz; ++i) {
    const auto r = read_int();
    const auto c = read_int();
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), read_double());
  }
  p.A.resize(m, n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  expect("slices");
  for (long long i = 0, cnt = read_int(); i < cnt; ++i) {
    NamedSlice s;
    in >> s.name;
    s.offset = static_cast<int>(read_int());
    s.length = static_cast<int>(read_int());
    p.var_map.push_back(s);
  }
  expect("end");
  p.validate();
  return p;
}

}  // namespace scmpc
