#include "tikmix/serialize.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tikmix/error.hpp"

namespace tikmix {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericalError("refusing to serialize a non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  const auto raw = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(raw.data(), static_cast<Eigen::Index>(raw.size()));
}

Json to_json(const Architecture& a) {
  Json j{{"kind", to_string(a.kind)}, {"input_dim", a.input_dim}};
  if (a.kind == ModelKind::Mlp) {
    j["hidden"] = a.hidden;
    j["activation"] = to_string(a.activation);
  }
  return j;
}

Architecture architecture_from_json(const Json& j) {
  Architecture a;
  a.kind = parse_model_kind(j.at("kind").get<std::string>());
  a.input_dim = j.at("input_dim").get<std::size_t>();
  if (a.kind == ModelKind::Mlp) {
    a.hidden = j.at("hidden").get<std::size_t>();
    a.activation = parse_activation(j.value("activation", std::string("tanh")));
  }
  return a;
}

Json to_json(const LossSpec& s) {
  return {{"loss", to_string(s.loss)}, {"l2", s.l2}, {"scale", s.scale}};
}

LossSpec loss_spec_from_json(const Json& j) {
  LossSpec s;
  s.loss = parse_loss_kind(j.at("loss").get<std::string>());
  s.l2 = j.value("l2", 0.0);
  s.scale = j.value("scale", 1.0);
  s.validate();
  return s;
}

Json to_json(const ModelState& m) {
  return {{"architecture", to_json(m.arch)}, {"params", vector_to_json(m.params)}};
}

ModelState model_from_json(const Json& j) {
  ModelState m{architecture_from_json(j.at("architecture")), vector_from_json(j.at("params"))};
  m.validate();
  return m;
}

Json to_json(const MixtureWeights& w) {
  Json values = Json::object();
  for (std::size_t k = 0; k < w.size(); ++k) values[w.names.at(k)] = w.w[static_cast<Eigen::Index>(k)];
  return {{"order", w.names}, {"weights", values}};
}

MixtureWeights weights_from_json(const Json& j) {
  MixtureWeights w;
  w.names = j.at("order").get<std::vector<std::string>>();
  w.w = Vector(static_cast<Eigen::Index>(w.names.size()));
  for (std::size_t k = 0; k < w.names.size(); ++k)
    w.w[static_cast<Eigen::Index>(k)] = j.at("weights").at(w.names[k]).get<double>();
  return w;
}

void write_matrix_table(std::ostream& os, const InfluenceMatrix& m, const std::string& comment) {
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) os << "# " << line << '\n';
  }
  os << "task";
  for (const auto& d : m.domain_names) os << '\t' << d;
  os << '\n';
  for (std::size_t i = 0; i < m.tasks(); ++i) {
    os << m.task_names[i];
    for (std::size_t j = 0; j < m.domains(); ++j)
      os << '\t' << format_double(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    os << '\n';
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("cannot parse number '" + s + "'");
  return v;
}

}  // namespace

InfluenceMatrix read_matrix_table(std::istream& is) {
  InfluenceMatrix m;
  std::string line;
  bool header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_tabs(line);
    if (!header) {
      if (cells.size() < 2) throw InputError("matrix header needs at least one domain column");
      m.domain_names.assign(cells.begin() + 1, cells.end());
      header = true;
      continue;
    }
    if (cells.size() != m.domain_names.size() + 1)
      throw InputError("matrix row '" + cells.front() + "' has the wrong number of columns");
    m.task_names.push_back(cells.front());
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_double(cells[k]));
    rows.push_back(std::move(row));
  }
  if (!header || rows.empty()) throw InputError("matrix file has no rows");
  m.values = Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.domain_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  m.validate();
  return m;
}

Json matrix_metadata(const InfluenceMatrix& m) {
  Json diag = Json::array();
  for (const auto& d : m.diagnostics)
    diag.push_back({{"converged", d.converged},
                    {"negative_curvature", d.negative_curvature},
                    {"iterations", d.iterations},
                    {"relative_residual", d.relative_residual}});
  return {{"checkpoint_id", m.checkpoint_id},
          {"orientation", m.orientation == Orientation::Benefit ? "benefit" : "raw-influence"},
          {"damping", m.damping},
          {"row_diagnostics", diag}};
}

void apply_matrix_metadata(InfluenceMatrix& m, const Json& meta) {
  m.checkpoint_id = meta.value("checkpoint_id", std::string());
  const auto orient = meta.value("orientation", std::string("raw-influence"));
  if (orient == "benefit")
    m.orientation = Orientation::Benefit;
  else if (orient == "raw-influence")
    m.orientation = Orientation::RawInfluence;
  else
    throw InputError("unknown matrix orientation '" + orient + "'");
  m.damping = meta.value("damping", 0.0);
  m.diagnostics.clear();
  if (meta.contains("row_diagnostics")) {
    for (const auto& d : meta.at("row_diagnostics"))
      m.diagnostics.push_back({d.at("converged").get<bool>(), d.at("negative_curvature").get<bool>(),
                               d.at("iterations").get<std::size_t>(),
                               d.at("relative_residual").get<double>()});
  }
  m.validate();
}

Json to_json(const ObjectiveTerms& t) {
  return {{"std_term", t.dispersion},
          {"sum_term", t.total},
          {"entropy_term", t.entropy},
          {"value", t.value}};
}

Json to_json(const MixDSolution& s) {
  return {{"weights", to_json(s.w_best)},
          {"objective", to_json(s.objective)},
          {"pareto_residuals", vector_to_json(s.pareto_residuals)},
          {"simplex_residual", s.simplex_residual},
          {"feasible", s.feasible},
          {"used_feasibility_phase", s.used_feasibility_phase},
          {"iterations", s.iterations},
          {"flagged_rows", s.flagged_rows},
          {"note", s.note}};
}

MixDSolution mixd_solution_from_json(const Json& j) {
  MixDSolution s;
  s.w_best = weights_from_json(j.at("weights"));
  const auto& o = j.at("objective");
  s.objective = {o.at("std_term").get<double>(), o.at("sum_term").get<double>(),
                 o.at("entropy_term").get<double>(), o.at("value").get<double>()};
  s.pareto_residuals = vector_from_json(j.at("pareto_residuals"));
  s.simplex_residual = j.at("simplex_residual").get<double>();
  s.feasible = j.at("feasible").get<bool>();
  s.used_feasibility_phase = j.at("used_feasibility_phase").get<bool>();
  s.iterations = j.at("iterations").get<std::size_t>();
  s.flagged_rows = j.at("flagged_rows").get<std::vector<std::size_t>>();
  s.note = j.at("note").get<std::string>();
  return s;
}

Json to_json(const SurrogateDataset& d) {
  Json entries = Json::array();
  for (std::size_t k = 0; k < d.size(); ++k) entries.push_back({{"w", vector_to_json(d.w[k])}, {"y", d.y[k]}});
  return {{"entries", entries}};
}

SurrogateDataset dataset_from_json(const Json& j) {
  SurrogateDataset d;
  for (const auto& e : j.at("entries")) {
    d.w.push_back(vector_from_json(e.at("w")));
    d.y.push_back(e.at("y").get<double>());
  }
  return d;
}

Json to_json(const SurrogateModel& m) {
  Json trees = Json::array();
  for (const auto& t : m.trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      if (n.feature < 0)
        nodes.push_back({{"leaf", n.value}});
      else
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value}});
    }
    trees.push_back(nodes);
  }
  return {{"loss", "squared-error"},
          {"trees_count", m.params.trees},
          {"max_depth", m.params.max_depth},
          {"learning_rate", m.params.learning_rate},
          {"min_samples_leaf", m.params.min_samples_leaf},
          {"feature_count", m.feature_count},
          {"base_score", m.base_score},
          {"training_rmse", m.training_rmse},
          {"trees", trees}};
}

SurrogateModel surrogate_from_json(const Json& j) {
  SurrogateModel m;
  m.params.trees = j.at("trees_count").get<std::size_t>();
  m.params.max_depth = j.at("max_depth").get<std::size_t>();
  m.params.learning_rate = j.at("learning_rate").get<double>();
  m.params.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  m.feature_count = j.at("feature_count").get<std::size_t>();
  m.base_score = j.at("base_score").get<double>();
  m.training_rmse = j.at("training_rmse").get<double>();
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t) {
      TreeNode node;
      if (n.contains("leaf")) {
        node.value = n.at("leaf").get<double>();
      } else {
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.value = n.at("value").get<double>();
      }
      tree.nodes.push_back(node);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

Json to_json(const SearchResult& r) {
  Json steps = Json::array();
  for (const auto& s : r.trace)
    steps.push_back({{"alpha", s.alpha},
                     {"concentration", s.concentration},
                     {"best_predicted", s.best_predicted},
                     {"top_k_mean_predicted", s.top_k_mean_predicted},
                     {"w_best", vector_to_json(s.w_best)}});
  return {{"w_best", vector_to_json(r.w_best)}, {"trace", steps}};
}

SearchResult search_result_from_json(const Json& j) {
  SearchResult r;
  r.w_best = vector_from_json(j.at("w_best"));
  for (const auto& s : j.at("trace"))
    r.trace.push_back({s.at("alpha").get<double>(), s.at("concentration").get<double>(),
                       s.at("best_predicted").get<double>(), s.at("top_k_mean_predicted").get<double>(),
                       vector_from_json(s.at("w_best"))});
  return r;
}

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) = vector_from_json(j.at(static_cast<std::size_t>(r))).transpose();
  return m;
}

}  // namespace

Json to_json(const AdditivityReport& r) {
  Json weights = Json::array();
  for (const auto& w : r.weights) weights.push_back(vector_to_json(w));
  Json corr = Json::array();
  for (const auto& p : r.pearson) corr.push_back(p ? Json(*p) : Json(nullptr));
  return {{"task_names", r.task_names},
          {"domain_names", r.domain_names},
          {"reference", matrix_to_json(r.reference)},
          {"weights", weights},
          {"predicted", matrix_to_json(r.predicted)},
          {"measured", matrix_to_json(r.measured)},
          {"pearson", corr},
          {"pearson_undefined", [&] {
             Json flags = Json::array();
             for (const auto& p : r.pearson) flags.push_back(!p.has_value());
             return flags;
           }()},
          {"outliers_removed", r.outliers_removed}};
}

AdditivityReport additivity_from_json(const Json& j) {
  AdditivityReport r;
  r.task_names = j.at("task_names").get<std::vector<std::string>>();
  r.domain_names = j.at("domain_names").get<std::vector<std::string>>();
  const auto n = static_cast<Eigen::Index>(r.task_names.size());
  r.reference = matrix_from_json(j.at("reference"), static_cast<Eigen::Index>(r.domain_names.size()));
  for (const auto& w : j.at("weights")) r.weights.push_back(vector_from_json(w));
  r.predicted = matrix_from_json(j.at("predicted"), n);
  r.measured = matrix_from_json(j.at("measured"), n);
  for (const auto& p : j.at("pearson"))
    r.pearson.push_back(p.is_null() ? std::nullopt : std::optional<double>(p.get<double>()));
  r.outliers_removed = j.at("outliers_removed").get<std::size_t>();
  return r;
}

Json stage_summary_json(const StageRecord& r) {
  Json j{{"index", r.index},
         {"strategy", to_string(r.strategy)},
         {"weights", to_json(r.weights)},
         {"val_before", vector_to_json(r.val_before)},
         {"val_after", vector_to_json(r.val_after)},
         {"note", r.note}};
  if (r.mixd) j["tikmix_d"] = to_json(*r.mixd);
  if (r.mixm) {
    j["tikmix_m"] = {{"w_searched", vector_to_json(r.mixm->w_searched)},
                     {"w_best", vector_to_json(r.mixm->w_best)},
                     {"true_score_start", r.mixm->true_score_start},
                     {"true_score_searched", r.mixm->true_score_searched},
                     {"fell_back_to_start", r.mixm->fell_back_to_start},
                     {"surrogate_training_rmse", r.mixm->surrogate.training_rmse}};
  }
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tikmix
