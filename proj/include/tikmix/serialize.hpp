#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "tikmix/additivity.hpp"
#include "tikmix/influence.hpp"
#include "tikmix/mixd.hpp"
#include "tikmix/model.hpp"
#include "tikmix/pipeline.hpp"
#include "tikmix/search.hpp"
#include "tikmix/surrogate.hpp"

namespace tikmix {

using Json = nlohmann::json;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const Architecture& a);
Architecture architecture_from_json(const Json& j);
Json to_json(const LossSpec& s);
LossSpec loss_spec_from_json(const Json& j);
Json to_json(const ModelState& m);
ModelState model_from_json(const Json& j);

/// {"name": weight, ...} plus an explicit order array.
Json to_json(const MixtureWeights& w);
MixtureWeights weights_from_json(const Json& j);

// Influence matrix: tab-separated table (header row of domain names, one row
// per task) preceded by '#' comment lines; metadata in a JSON sidecar.
void write_matrix_table(std::ostream& os, const InfluenceMatrix& m, const std::string& comment);
InfluenceMatrix read_matrix_table(std::istream& is);
Json matrix_metadata(const InfluenceMatrix& m);
void apply_matrix_metadata(InfluenceMatrix& m, const Json& meta);

Json to_json(const ObjectiveTerms& t);
Json to_json(const MixDSolution& s);
MixDSolution mixd_solution_from_json(const Json& j);

Json to_json(const SurrogateDataset& d);
SurrogateDataset dataset_from_json(const Json& j);
Json to_json(const SurrogateModel& m);
SurrogateModel surrogate_from_json(const Json& j);
Json to_json(const SearchResult& r);
SearchResult search_result_from_json(const Json& j);

Json to_json(const AdditivityReport& r);
AdditivityReport additivity_from_json(const Json& j);

/// Stage record without the bulky nested artifacts (those go to their own files).
Json stage_summary_json(const StageRecord& r);

/// Deterministic pretty dump with a trailing newline.
std::string dump(const Json& j);

}  // namespace tikmix
