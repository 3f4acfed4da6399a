#pragma once

#include <string>

#include "seqsql/sqlcore/ast.hpp"

namespace seqsql {

// Parses one statement in the extended dialect. Throws ParseError on bad
// syntax and UnsupportedConstructError on recognized-but-unsupported SQL.
SqlAst parse_sql(const std::string& text);

}  // namespace seqsql
