#include <sstream>
#include <string>

#include "json.hpp"

#include "asbart/dataio.hpp"
#include "asbart/error.hpp"

namespace asbart {

namespace {

using json = nlohmann::json;

constexpr std::string_view kMagic = "ASBART-MODEL";

Error format_error(const std::string& what) { return {ErrorCode::parse, "model file: " + what}; }

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    json node{{"id", n.id}, {"depth", n.depth}, {"parent", n.parent}};
    if (n.is_leaf) {
      node["leaf"] = n.leaf_value;
    } else {
      node["var"] = n.split_var;
      node["cut"] = n.cutpoint;
      node["dummy"] = n.hard_split;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(std::move(node));
  }
  return {{"tau", tree.tau()}, {"gate", std::string(to_string(tree.gate()))}, {"nodes", std::move(nodes)}};
}

// Field access that reports the json path of whatever is missing or mistyped.
template <typename T>
T field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw format_error("missing field '" + path + "." + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw format_error("field '" + path + "." + key + "' has the wrong type");
  }
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw format_error("missing field '" + path + "." + key + "'");
  return obj.at(key);
}

DecisionTree tree_from_json(const json& doc, const std::string& path) {
  const auto gate_name = field<std::string>(doc, "gate", path);
  GateFamily gate;
  try {
    gate = parse_gate_family(gate_name);
  } catch (const Error&) {
    throw format_error("field '" + path + ".gate' has unknown value '" + gate_name + "'");
  }
  const auto& nodes_doc = member(doc, "nodes", path);
  if (!nodes_doc.is_array()) throw format_error("field '" + path + ".nodes' must be an array");
  std::vector<TreeNode> nodes;
  for (std::size_t k = 0; k < nodes_doc.size(); ++k) {
    const auto& nd = nodes_doc[k];
    const std::string np = path + ".nodes[" + std::to_string(k) + "]";
    TreeNode n;
    n.id = field<NodeId>(nd, "id", np);
    n.depth = field<int>(nd, "depth", np);
    n.parent = field<NodeId>(nd, "parent", np);
    if (nd.contains("leaf")) {
      n.is_leaf = true;
      n.leaf_value = field<double>(nd, "leaf", np);
    } else {
      n.is_leaf = false;
      n.split_var = field<int>(nd, "var", np);
      n.cutpoint = field<double>(nd, "cut", np);
      n.hard_split = field<bool>(nd, "dummy", np);
      n.left = field<NodeId>(nd, "left", np);
      n.right = field<NodeId>(nd, "right", np);
    }
    nodes.push_back(n);
  }
  try {
    return DecisionTree::from_nodes(std::move(nodes), field<double>(doc, "tau", path), gate);
  } catch (const Error& e) {
    throw Error(e.code(), "model file: " + path + ": " + e.what());
  }
}

json config_to_json(const FitConfig& c) {
  return {{"num_trees", c.num_trees},
          {"sweeps", c.sweeps},
          {"burn_in", c.burn_in},
          {"gate", std::string(to_string(c.gate))},
          {"grid_percents", c.grid_percents},
          {"seed", c.seed},
          {"max_depth", c.limits.max_depth},
          {"min_node_size", c.limits.min_node_size},
          {"features_per_node", c.limits.features_per_node},
          {"alpha", c.split_prior.alpha},
          {"beta", c.split_prior.beta},
          {"leaf_prior_k", c.leaf_prior_k},
          {"sigma_nu", c.sigma_nu},
          {"sigma_quantile", c.sigma_quantile},
          {"max_cutpoints", c.max_cutpoints}};
}

FitConfig config_from_json(const json& d) {
  const std::string p = "config";
  FitConfig c;
  c.num_trees = field<int>(d, "num_trees", p);
  c.sweeps = field<int>(d, "sweeps", p);
  c.burn_in = field<int>(d, "burn_in", p);
  c.gate = parse_gate_family(field<std::string>(d, "gate", p));
  c.grid_percents = field<std::vector<double>>(d, "grid_percents", p);
  c.seed = field<std::uint64_t>(d, "seed", p);
  c.limits.max_depth = field<int>(d, "max_depth", p);
  c.limits.min_node_size = field<std::size_t>(d, "min_node_size", p);
  c.limits.features_per_node = field<std::size_t>(d, "features_per_node", p);
  c.split_prior.alpha = field<double>(d, "alpha", p);
  c.split_prior.beta = field<double>(d, "beta", p);
  c.leaf_prior_k = field<double>(d, "leaf_prior_k", p);
  c.sigma_nu = field<double>(d, "sigma_nu", p);
  c.sigma_quantile = field<double>(d, "sigma_quantile", p);
  c.max_cutpoints = field<std::size_t>(d, "max_cutpoints", p);
  return c;
}

class SectionReader {
 public:
  explicit SectionReader(std::string_view text) : text_(text) {}

  bool next_line(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    return true;
  }

  // Returns the payload following "@tag ".
  std::string_view expect(std::string_view tag, const std::string& label) {
    std::string_view line;
    if (!next_line(line)) throw format_error("truncated: missing section '" + label + "'");
    const std::string prefix = "@" + std::string(tag);
    if (line.substr(0, prefix.size()) != prefix ||
        (line.size() > prefix.size() && line[prefix.size()] != ' ')) {
      throw format_error("expected section '" + label + "', found '" + std::string(line.substr(0, 40)) + "'");
    }
    return line.size() > prefix.size() ? line.substr(prefix.size() + 1) : std::string_view{};
  }

  json expect_json(std::string_view tag, const std::string& label) {
    const auto payload = expect(tag, label);
    try {
      return json::parse(payload);
    } catch (const json::exception& e) {
      throw format_error("section '" + label + "' is corrupted: " + e.what());
    }
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const FittedModel& model) {
  std::ostringstream out;
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "@schema " << (model.schema.target.empty() ? std::string("null") : schema_to_json(model.schema)) << '\n';
  json features = json::array();
  for (const auto& f : model.features) {
    features.push_back({{"name", f.name}, {"dummy", f.is_dummy}, {"source", f.source}, {"level", f.level}});
  }
  out << "@features " << features.dump() << '\n';
  out << "@config " << config_to_json(model.config).dump() << '\n';
  out << "@transform "
      << json{{"y_center", model.y_center},
              {"y_scale", model.y_scale},
              {"sigma_mu2", model.sigma_mu2},
              {"sigma_nu", model.sigma_prior.nu},
              {"sigma_lambda", model.sigma_prior.lambda}}
             .dump()
      << '\n';
  out << "@diagnostics "
      << json{{"sigma2_trace", model.sigma2_trace},
              {"residual_drift", model.residual_drift},
              {"mean_tau_trace", model.mean_tau_trace},
              {"proposals", model.proposals},
              {"accepted", model.accepted},
              {"seconds", model.seconds}}
             .dump()
      << '\n';
  out << "@quantiles " << json(model.quantile_tables).dump() << '\n';
  out << "@forests " << model.retained.size() << '\n';
  for (const auto& forest : model.retained) {
    json trees = json::array();
    for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
    out << "@forest " << json{{"sigma2", forest.sigma2}, {"trees", std::move(trees)}}.dump() << '\n';
  }
  out << "@end\n";
  return out.str();
}

FittedModel parse_model(std::string_view text) {
  SectionReader reader(text);
  std::string_view line;
  if (!reader.next_line(line) || line.substr(0, kMagic.size()) != kMagic) {
    throw format_error("not an asbart model document (missing header line)");
  }
  int version = 0;
  try {
    version = std::stoi(std::string(line.substr(kMagic.size())));
  } catch (const std::exception&) {
    throw format_error("unreadable version in header line");
  }
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::version, "model file: incompatible format version " + std::to_string(version) +
                                        " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
  }

  FittedModel model;
  try {
    const auto payload = reader.expect("schema", "@schema");
    if (payload != "null") model.schema = parse_schema(std::string(payload));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::parse && std::string_view(e.what()).starts_with("model file")) throw;
    throw format_error(std::string("section '@schema': ") + e.what());
  }
  const json features = reader.expect_json("features", "@features");
  if (!features.is_array()) throw format_error("section '@features' must be an array");
  for (std::size_t k = 0; k < features.size(); ++k) {
    const std::string p = "features[" + std::to_string(k) + "]";
    model.features.push_back({field<std::string>(features[k], "name", p), field<bool>(features[k], "dummy", p),
                              field<std::string>(features[k], "source", p), field<int>(features[k], "level", p)});
  }
  try {
    model.config = config_from_json(reader.expect_json("config", "@config"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::parse) throw;
    throw format_error(std::string("section '@config': ") + e.what());
  }
  const json transform = reader.expect_json("transform", "@transform");
  model.y_center = field<double>(transform, "y_center", "transform");
  model.y_scale = field<double>(transform, "y_scale", "transform");
  model.sigma_mu2 = field<double>(transform, "sigma_mu2", "transform");
  model.sigma_prior.nu = field<double>(transform, "sigma_nu", "transform");
  model.sigma_prior.lambda = field<double>(transform, "sigma_lambda", "transform");
  const json diag = reader.expect_json("diagnostics", "@diagnostics");
  model.sigma2_trace = field<std::vector<double>>(diag, "sigma2_trace", "diagnostics");
  model.residual_drift = field<std::vector<double>>(diag, "residual_drift", "diagnostics");
  model.mean_tau_trace = field<std::vector<double>>(diag, "mean_tau_trace", "diagnostics");
  model.proposals = field<std::size_t>(diag, "proposals", "diagnostics");
  model.accepted = field<std::size_t>(diag, "accepted", "diagnostics");
  model.seconds = field<double>(diag, "seconds", "diagnostics");
  const json quantiles = reader.expect_json("quantiles", "@quantiles");
  try {
    model.quantile_tables = quantiles.get<std::vector<std::vector<double>>>();
  } catch (const json::exception&) {
    throw format_error("section '@quantiles' must be an array of numeric arrays");
  }

  std::size_t count = 0;
  {
    const auto payload = reader.expect("forests", "@forests");
    try {
      count = static_cast<std::size_t>(std::stoull(std::string(payload)));
    } catch (const std::exception&) {
      throw format_error("section '@forests' must carry the forest count");
    }
  }
  for (std::size_t s = 0; s < count; ++s) {
    const std::string label = "@forest (" + std::to_string(s + 1) + " of " + std::to_string(count) + ")";
    const json doc = reader.expect_json("forest", label);
    const std::string path = "forests[" + std::to_string(s) + "]";
    Forest forest;
    forest.sigma2 = field<double>(doc, "sigma2", path);
    const auto& trees = member(doc, "trees", path);
    if (!trees.is_array()) throw format_error("field '" + path + ".trees' must be an array");
    for (std::size_t t = 0; t < trees.size(); ++t) {
      forest.trees.push_back(tree_from_json(trees[t], path + ".trees[" + std::to_string(t) + "]"));
    }
    model.retained.push_back(std::move(forest));
  }
  reader.expect("end", "@end");
  if (model.retained.empty()) throw format_error("model has no retained forests");
  return model;
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

FittedModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace asbart
