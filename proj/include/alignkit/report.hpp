#ifndef ALIGNKIT_REPORT_HPP
#define ALIGNKIT_REPORT_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "alignkit/abstraction.hpp"
#include "alignkit/alignment.hpp"
#include "alignkit/leakage.hpp"
#include "alignkit/world_spec.hpp"

namespace alignkit {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit digest as 16 hex characters.
std::string digest(const std::string& bytes);

/// Fixed 12-significant-digit rendering for golden-file comparison.
std::string format_g12(double v);

/// Shortest decimal that round-trips to the same double.
std::string format_shortest(double v);

namespace report {

using json = nlohmann::ordered_json;

/// Common report head: tool name, version, digest of the canonical input.
json envelope(const std::string& command, const WorldSpec& spec);

/// Inserts value under `key` plus a `<key>_g12` fixed-format companion.
void metric(json& j, const std::string& key, double value);

json to_json(const ValidationReport& v);
json to_json(const JointTable& t);
json to_json(const DisentanglementVerdict& v);
json matrix_json(const std::vector<std::vector<double>>& m,
                 const std::vector<std::string>& row_names,
                 const std::vector<std::string>& col_names);
json to_json(const AlignmentReport& r, const GmSystem& sys);
json to_json(const BlockAlignmentReport& r);
json to_json(const DciResult& r);
json to_json(const LeakageResult& r);
json to_json(const AbstractionReport& r);
json to_json(const Assignment& a);

/// Header row = variable names; assignments row-major (lexicographic).
std::string table_csv(const JointTable& t);
std::string matrix_csv(const std::vector<std::vector<double>>& m,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names);

} // namespace report

} // namespace alignkit

#endif
