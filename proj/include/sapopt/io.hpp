#ifndef SAPOPT_IO_HPP
#define SAPOPT_IO_HPP

/**
 * @file
 * @brief JSON files for problems, portfolio specifications and solve results.
 *
 * Infinite interval endpoints are written as the strings "-inf" and "inf".
 * Parse failures throw Error(ParseError) naming the line or the JSON field.
 */

#include <optional>
#include <string>

#include "json.hpp"

#include "sapopt/admm.hpp"
#include "sapopt/portfolio.hpp"

namespace sapopt {

using Json = nlohmann::ordered_json;

struct ProblemFile
{
  SapProblem problem;
  std::optional<Scaling> scaling;
};

Json pwq_to_json(const Pwq& f);
Pwq pwq_from_json(const Json& j, const std::string& where = "function");

Json problem_to_json(const SapProblem& p, const std::optional<Scaling>& scaling = std::nullopt);
ProblemFile problem_from_json(const Json& j);

Json portfolio_to_json(const PortfolioSpec& spec);
PortfolioSpec portfolio_from_json(const Json& j);

Json result_to_json(const SolveResult& r, const SolveOptions& opts);

/// Parses text, reporting syntax errors with line and column.
Json parse_json(const std::string& text);

/// Reads and parses a file; "format" tells problem and portfolio files apart.
Json read_json_file(const std::string& path);

std::string dump(const Json& j);

}  // namespace sapopt

#endif  // SAPOPT_IO_HPP
