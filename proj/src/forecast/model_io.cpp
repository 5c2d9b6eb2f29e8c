#include "gridbench/model_io.hpp"

#include <spdlog/fmt/fmt.h>

namespace gridbench {

using nlohmann::json;

namespace {

json header(const char* kind) { return json{{"kind", kind}, {"schema_version", kModelSchemaVersion}}; }

void expect(const json& j, const char* kind) {
  if (!j.is_object() || j.value("kind", std::string{}) != kind) {
    throw DataError(fmt::format("expected a '{}' model document", kind));
  }
  if (j.value("schema_version", 0) != kModelSchemaVersion) {
    throw DataError(fmt::format("unsupported '{}' schema version", kind));
  }
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json state_to_json(const HwState& s) {
  return json{{"level", s.level}, {"trend", s.trend}, {"s1", s.s1}, {"s2", s.s2}, {"last", s.last}};
}

HwState state_from_json(const json& j) {
  HwState s;
  s.level = j.at("level").get<double>();
  s.trend = j.at("trend").get<double>();
  s.s1 = j.at("s1").get<std::vector<double>>();
  s.s2 = j.at("s2").get<std::vector<double>>();
  s.last = j.at("last").get<Index>();
  return s;
}

json tree_to_json(const RegressionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back(json::array({n.feature, n.bin, n.threshold, n.left, n.right, n.value}));
  }
  return nodes;
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.bin = n.at(1).get<int>();
    node.threshold = n.at(2).get<double>();
    node.left = n.at(3).get<int>();
    node.right = n.at(4).get<int>();
    node.value = n.at(5).get<double>();
    t.nodes.push_back(node);
  }
  if (t.nodes.empty()) throw DataError("regression tree without nodes");
  return t;
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) throw DataError("matrix document size mismatch");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

json to_json(const DetrendModel& m) {
  json j = header("detrend");
  j["beta"] = {m.beta[0], m.beta[1], m.beta[2]};
  j["dropped_ghi"] = m.dropped_ghi;
  j["dropped_temperature"] = m.dropped_temperature;
  return j;
}

DetrendModel detrend_from_json(const json& j) {
  expect(j, "detrend");
  DetrendModel m;
  const auto b = j.at("beta").get<std::vector<double>>();
  if (b.size() != 3) throw DataError("detrend beta must have 3 entries");
  m.beta = Eigen::Vector3d(b[0], b[1], b[2]);
  m.dropped_ghi = j.at("dropped_ghi").get<bool>();
  m.dropped_temperature = j.at("dropped_temperature").get<bool>();
  return m;
}

json to_json(const HwParams& m) {
  json j = header("holt_winters");
  j["p1"] = m.config.p1;
  j["p2"] = m.config.p2;
  j["literal_s2_decay"] = m.config.literal_s2_decay;
  json steps = json::array();
  for (const auto& w : m.per_step) steps.push_back(json::array({w.alpha, w.beta, w.gamma1, w.gamma2}));
  j["per_step"] = std::move(steps);
  j["initial"] = m.initial ? state_to_json(*m.initial) : json(nullptr);
  j["detrend"] = m.detrend ? to_json(*m.detrend) : json(nullptr);
  return j;
}

HwParams hw_params_from_json(const json& j) {
  expect(j, "holt_winters");
  HwParams m;
  m.config.p1 = j.at("p1").get<int>();
  m.config.p2 = j.at("p2").get<int>();
  m.config.literal_s2_decay = j.at("literal_s2_decay").get<bool>();
  for (const auto& w : j.at("per_step")) {
    m.per_step.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>(), w.at(3).get<double>()});
  }
  if (!j.at("initial").is_null()) m.initial = state_from_json(j.at("initial"));
  if (!j.at("detrend").is_null()) m.detrend = detrend_from_json(j.at("detrend"));
  return m;
}

json to_json(const ArmaxEnsemble& m) {
  json j = header("armax");
  j["orders"] = {{"ar", m.orders.ar}, {"ma", m.orders.ma}, {"long_ar", m.orders.long_ar}};
  j["dropped"] = m.dropped;
  json members = json::array();
  for (const auto& mm : m.members) {
    members.push_back({{"phi", vector_to_json(mm.phi)}, {"theta", vector_to_json(mm.theta)}, {"beta", vector_to_json(mm.beta)}});
  }
  j["members"] = std::move(members);
  return j;
}

ArmaxEnsemble armax_from_json(const json& j) {
  expect(j, "armax");
  ArmaxEnsemble m;
  const auto& o = j.at("orders");
  m.orders = {o.at("ar").get<int>(), o.at("ma").get<int>(), o.at("long_ar").get<int>()};
  m.dropped = j.at("dropped").get<int>();
  for (const auto& mm : j.at("members")) {
    m.members.push_back({vector_from_json(mm.at("phi")), vector_from_json(mm.at("theta")), vector_from_json(mm.at("beta"))});
  }
  return m;
}

json to_json(const KnnModel& m) {
  json j = header("knn");
  j["k"] = m.k;
  j["mean"] = vector_to_json(m.mean);
  j["scale"] = vector_to_json(m.scale);
  j["features"] = matrix_to_json(m.features);
  j["targets"] = matrix_to_json(m.targets);
  return j;
}

KnnModel knn_from_json(const json& j) {
  expect(j, "knn");
  KnnModel m;
  m.k = j.at("k").get<int>();
  m.mean = vector_from_json(j.at("mean"));
  m.scale = vector_from_json(j.at("scale"));
  m.features = matrix_from_json(j.at("features"));
  m.targets = matrix_from_json(j.at("targets"));
  if (m.features.rows() != m.targets.rows() || m.features.cols() != m.mean.size() || m.mean.size() != m.scale.size()) {
    throw DataError("inconsistent KNN model document");
  }
  return m;
}

json to_json(const BoostedTreesModel& m) {
  json j = header("boosted_trees");
  j["base"] = m.base;
  j["learning_rate"] = m.learning_rate;
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

BoostedTreesModel boosted_trees_from_json(const json& j) {
  expect(j, "boosted_trees");
  BoostedTreesModel m;
  m.base = j.at("base").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

json to_json(const FeatureBinner& m) {
  json j = header("feature_binner");
  j["cuts"] = m.cuts;
  return j;
}

FeatureBinner binner_from_json(const json& j) {
  expect(j, "feature_binner");
  FeatureBinner m;
  m.cuts = j.at("cuts").get<std::vector<std::vector<double>>>();
  return m;
}

}  // namespace gridbench
