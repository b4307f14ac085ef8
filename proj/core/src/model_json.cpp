#include "scmpc/model_json.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scmpc/errors.hpp"

namespace scmpc {
namespace {

using nlohmann::json;

MatrixXd parse_matrix(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  MatrixXd M(rows, cols);
  if (!j.empty() && j.front().is_array()) {
    if (static_cast<int>(j.size()) != rows) throw ConfigError(what + ": wrong row count");
    for (int r = 0; r < rows; ++r) {
      const json& row = j[r];
      if (!row.is_array() || static_cast<int>(row.size()) != cols) throw ConfigError(what + ": wrong column count");
      for (int c = 0; c < cols; ++c) M(r, c) = row[c].get<double>();
    }
    return M;
  }
  if (static_cast<int>(j.size()) != rows * cols) throw ConfigError(what + ": wrong element count");
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = j[r * cols + c].get<double>();
  return M;
}

/// Row count of a matrix given either nested or flat with known column count.
int infer_rows(const json& j, int cols, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  if (j.empty()) return 0;
  if (j.front().is_array()) return static_cast<int>(j.size());
  if (cols == 0 || j.size() % cols != 0) throw ConfigError(what + ": element count not a multiple of columns");
  return static_cast<int>(j.size()) / cols;
}

struct AffineMatrix {
  MatrixXd nominal;
  std::vector<std::pair<int, MatrixXd>> terms;

  MatrixXd at(const VectorXd& theta) const {
    MatrixXd out = nominal;
    for (const auto& [k, coef] : terms) out += theta(k) * coef;
    return out;
  }
};

AffineMatrix parse_affine(const json& j, int rows, int cols, int theta_dim, const std::string& what) {
  AffineMatrix a;
  if (j.is_object()) {
    a.nominal = parse_matrix(j.at("nominal"), rows, cols, what + ".nominal");
    if (j.contains("theta")) {
      for (const json& t : j.at("theta")) {
        const int k = t.at("index").get<int>();
        if (k < 0 || k >= theta_dim) throw ConfigError(what + ": theta index out of range");
        a.terms.emplace_back(k, parse_matrix(t.at("coef"), rows, cols, what + ".coef"));
      }
    }
  } else {
    a.nominal = parse_matrix(j, rows, cols, what);
  }
  return a;
}

Distribution parse_distribution(const json& j, const std::string& what) {
  const std::string kind = j.at("dist").get<std::string>();
  if (kind == "uniform") return Distribution::uniform(j.at("low").get<double>(), j.at("high").get<double>());
  if (kind == "gaussian" || kind == "normal") {
    return Distribution::gaussian(j.value("mean", 0.0), j.value("stddev", 1.0));
  }
  throw ConfigError(what + ": unknown distribution '" + kind + "'");
}

}  // namespace

UncertainModel model_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }

  try {
    UncertainModel::Spec spec;
    spec.name = doc.value("name", "json-model");
    const int n = doc.at("n").get<int>();
    const int m = doc.at("m").get<int>();
    const int mg = doc.value("m_gamma", 0);
    std::vector<Distribution> theta;
    if (doc.contains("theta")) {
      for (const json& t : doc.at("theta")) theta.push_back(parse_distribution(t, "theta"));
    }
    const int g = static_cast<int>(theta.size());
    spec.dims = {n, m, mg, g};
    spec.theta_distributions = theta;

    std::vector<Distribution> gamma;
    if (doc.contains("gamma")) {
      for (const json& t : doc.at("gamma")) gamma.push_back(parse_distribution(t, "gamma"));
    }
    if (static_cast<int>(gamma.size()) != mg) throw ConfigError("gamma distribution count must equal m_gamma");
    if (mg > 0) {
      spec.gamma_sampler = [gamma](RandomStream& rng) {
        VectorXd out(static_cast<Eigen::Index>(gamma.size()));
        for (std::size_t k = 0; k < gamma.size(); ++k) out(static_cast<Eigen::Index>(k)) = gamma[k].sample(rng);
        return out;
      };
    }

    const AffineMatrix A = parse_affine(doc.at("A"), n, n, g, "A");
    const AffineMatrix B = parse_affine(doc.at("B"), n, m, g, "B");
    const AffineMatrix Bg = mg > 0 ? parse_affine(doc.at("B_gamma"), n, mg, g, "B_gamma")
                                   : AffineMatrix{MatrixXd::Zero(n, 0), {}};
    spec.matrix_eval = [A, B, Bg](const VectorXd& th) {
      return SystemMatrices{A.at(th), B.at(th), Bg.at(th)};
    };

    const json& sc = doc.at("state_constraints");
    const json& ic = doc.at("input_constraints");
    const int r = infer_rows(sc.at("G"), n, "state_constraints.G");
    const int q = infer_rows(ic.at("G"), m, "input_constraints.G");
    const MatrixXd Gx = parse_matrix(sc.at("G"), r, n, "state_constraints.G");
    const MatrixXd Gu = parse_matrix(ic.at("G"), q, m, "input_constraints.G");
    const AffineMatrix gx = parse_affine(sc.at("g"), r, 1, g, "state_constraints.g");
    const AffineMatrix gu = parse_affine(ic.at("g"), q, 1, g, "input_constraints.g");
    spec.constraint_eval = [Gx, Gu, gx, gu](const VectorXd& th) {
      return ConstraintData{Gx, gx.at(th), Gu, gu.at(th)};
    };

    spec.K_f = parse_matrix(doc.at("K_f"), m, n, "K_f");
    spec.Q_f = parse_matrix(doc.at("Q_f"), n, n, "Q_f");
    return UncertainModel(std::move(spec));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
}

UncertainModel model_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json_text(buf.str());
}

UncertainModel resolve_model(const std::string& name_or_path) {
  if (name_or_path == kExampleModelName) return example_plant();
  return model_from_file(name_or_path);
}

}  // namespace scmpc
