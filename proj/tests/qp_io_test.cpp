#include "srmpc/qp_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>

#include "qp_oracle.hpp"
#include "srmpc/error.hpp"

namespace srmpc {
namespace {

using namespace testing;

TEST(QpJson, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const QpProblem p = oracle::random_qp(rng).to_problem();
    const QpSolution sol = solve(p);
    const QpRecord rec = qp_from_json(nlohmann::json::parse(qp_to_json(p, &sol).dump()));
    EXPECT_TRUE(Eigen::MatrixXd(rec.problem.H) == Eigen::MatrixXd(p.H));
    EXPECT_TRUE(Eigen::MatrixXd(rec.problem.A) == Eigen::MatrixXd(p.A));
    EXPECT_TRUE(rec.problem.g == p.g);
    EXPECT_TRUE(rec.problem.l == p.l);
    EXPECT_TRUE(rec.problem.u == p.u);
    ASSERT_TRUE(rec.solution.has_value());
    EXPECT_TRUE(rec.solution->z == sol.z);
    EXPECT_EQ(rec.solution->status, sol.status);
  }
}

TEST(QpJson, InfiniteBoundsAreNull) {
  QpProblem p;
  p.H = sparse_from_dense(Eigen::MatrixXd::Identity(1, 1));
  p.g = Eigen::VectorXd::Zero(1);
  p.A = sparse_from_dense(Eigen::MatrixXd::Identity(1, 1));
  p.l = Eigen::VectorXd::Constant(1, -std::numeric_limits<double>::infinity());
  p.u = Eigen::VectorXd::Constant(1, 2.0);
  const auto doc = qp_to_json(p);
  EXPECT_EQ(doc.at("schema"), kQpSchema);
  EXPECT_TRUE(doc.at("l")[0].is_null());
  EXPECT_EQ(doc.at("u")[0], 2.0);
  EXPECT_FALSE(doc.contains("solution"));
  EXPECT_TRUE(std::isinf(qp_from_json(doc).problem.l[0]));
}

TEST(QpJson, RejectsBadDocuments) {
  std::mt19937_64 rng(2);
  const QpProblem p = oracle::random_qp(rng).to_problem();
  auto doc = qp_to_json(p);
  auto wrong_schema = doc;
  wrong_schema["schema"] = "srmpc.qp/0";
  EXPECT_THROW(qp_from_json(wrong_schema), InvalidArgument);
  auto short_g = doc;
  short_g["g"].erase(0);
  EXPECT_THROW(qp_from_json(short_g), InvalidArgument);
  auto missing = doc;
  missing.erase("A");
  EXPECT_THROW(qp_from_json(missing), InvalidArgument);
  auto out_of_range = doc;
  out_of_range["H"]["entries"].push_back({99, 0, 1.0});
  EXPECT_THROW(qp_from_json(out_of_range), InvalidArgument);
}

TEST(QpJson, FileCorpus) {
  const auto dir = std::filesystem::temp_directory_path() / "srmpc_qp_corpus_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3; ++i) save_qp(dir / ("p" + std::to_string(i) + ".json"), oracle::random_qp(rng).to_problem());
  const auto files = list_qp_corpus(dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "p0.json");
  EXPECT_FALSE(load_qp(files[1]).solution.has_value());
  EXPECT_THROW(load_qp(dir / "missing.json"), InvalidArgument);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace srmpc
