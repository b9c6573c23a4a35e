#include "srmpc/qp_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "srmpc/error.hpp"

namespace srmpc {
namespace {

using nlohmann::json;

json sparse_to_json(const SparseMatrix& m) {
  json entries = json::array();
  for (int col = 0; col < m.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
      entries.push_back({it.row(), it.col(), it.value()});
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

SparseMatrix sparse_from_json(const json& doc, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (doc.at("rows").get<Eigen::Index>() != rows || doc.at("cols").get<Eigen::Index>() != cols) {
    throw InvalidArgument(std::string("qp json: ") + name + " has wrong dimensions");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& e : doc.at("entries")) {
    const auto i = e.at(0).get<Eigen::Index>();
    const auto j = e.at(1).get<Eigen::Index>();
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw InvalidArgument(std::string("qp json: ") + name + " entry out of range");
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), e.at(2).get<double>());
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      out.push_back(v[i]);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& doc, Eigen::Index size, double null_value, const char* name) {
  if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != size) {
    throw InvalidArgument(std::string("qp json: ") + name + " has wrong length");
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const auto& e = doc[static_cast<std::size_t>(i)];
    v[i] = e.is_null() ? null_value : e.get<double>();
  }
  return v;
}

}  // namespace

json qp_to_json(const QpProblem& problem, const QpSolution* solution) {
  json doc = {
      {"schema", kQpSchema},
      {"n", problem.num_variables()},
      {"m", problem.num_constraints()},
      {"H", sparse_to_json(problem.H)},
      {"g", vector_to_json(problem.g)},
      {"A", sparse_to_json(problem.A)},
      {"l", vector_to_json(problem.l)},
      {"u", vector_to_json(problem.u)},
  };
  if (solution != nullptr) {
    doc["solution"] = {
        {"status", std::string(to_string(solution->status))},
        {"z", vector_to_json(solution->z)},
        {"y", vector_to_json(solution->y)},
        {"objective", solution->objective},
        {"iterations", solution->iterations},
    };
  }
  return doc;
}

QpRecord qp_from_json(const json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kQpSchema) {
      throw InvalidArgument("qp json: unsupported schema " + doc.at("schema").get<std::string>());
    }
    const auto n = doc.at("n").get<Eigen::Index>();
    const auto m = doc.at("m").get<Eigen::Index>();
    constexpr double inf = std::numeric_limits<double>::infinity();
    QpRecord rec;
    rec.problem.H = sparse_from_json(doc.at("H"), n, n, "H");
    rec.problem.g = vector_from_json(doc.at("g"), n, 0.0, "g");
    rec.problem.A = sparse_from_json(doc.at("A"), m, n, "A");
    rec.problem.l = vector_from_json(doc.at("l"), m, -inf, "l");
    rec.problem.u = vector_from_json(doc.at("u"), m, inf, "u");
    rec.problem.validate();
    if (doc.contains("solution")) {
      const auto& s = doc.at("solution");
      QpSolution sol;
      sol.status = parse_qp_status(s.at("status").get<std::string>());
      sol.z = vector_from_json(s.at("z"), n, 0.0, "solution.z");
      sol.y = vector_from_json(s.at("y"), m, 0.0, "solution.y");
      sol.objective = s.at("objective").get<double>();
      sol.iterations = s.value("iterations", 0);
      rec.solution = std::move(sol);
    }
    return rec;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("qp json: ") + e.what());
  }
}

void save_qp(const std::filesystem::path& path, const QpProblem& problem, const QpSolution* solution) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << qp_to_json(problem, solution).dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

QpRecord load_qp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return qp_from_json(doc);
}

std::vector<std::filesystem::path> list_qp_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace srmpc
