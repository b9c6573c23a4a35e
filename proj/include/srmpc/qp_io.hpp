#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "srmpc/qp.hpp"

namespace srmpc {

inline constexpr const char* kQpSchema = "srmpc.qp/1";

// A stored problem with an optional reference solution, as kept in
// regression corpora.
struct QpRecord {
  QpProblem problem;
  std::optional<QpSolution> solution;
};

// Infinite bounds are written as null. Sparse matrices are coordinate lists.
nlohmann::json qp_to_json(const QpProblem& problem, const QpSolution* solution = nullptr);
// Throws InvalidArgument on schema or dimension errors.
QpRecord qp_from_json(const nlohmann::json& doc);

void save_qp(const std::filesystem::path& path, const QpProblem& problem,
             const QpSolution* solution = nullptr);
QpRecord load_qp(const std::filesystem::path& path);

// Every *.json file of a directory, sorted by name.
std::vector<std::filesystem::path> list_qp_corpus(const std::filesystem::path& dir);

}  // namespace srmpc
