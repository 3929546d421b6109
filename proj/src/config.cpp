#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oasis/study.hpp"

namespace oasis {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error("key '" + key + "' has the wrong type");
  }
}

}  // namespace

StudyConfig parse_config(const std::string& text, const fs::path& base_dir) {
  const json root = parse_json(text);
  if (!root.is_object()) config_error("configuration must be a JSON object");
  reject_unknown(root, {"label", "data", "variables", "var", "identification", "irf", "scan", "proxy", "output"},
                 "configuration");

  StudyConfig cfg;
  if (root.contains("label")) cfg.label = get_as<std::string>(root["label"], "label");
  if (!root.contains("data")) config_error("missing 'data'");
  cfg.data_path = resolve(base_dir, get_as<std::string>(root["data"], "data"));

  if (!root.contains("variables") || !root["variables"].is_array() || root["variables"].empty()) {
    config_error("'variables' must be a non-empty array");
  }
  for (const json& v : root["variables"]) {
    VariableSpec spec;
    if (v.is_string()) {
      spec.name = v.get<std::string>();
    } else if (v.is_object()) {
      reject_unknown(v, {"name", "transform"}, "variables entry");
      if (!v.contains("name")) config_error("variables entry without 'name'");
      spec.name = get_as<std::string>(v["name"], "name");
      if (v.contains("transform")) spec.transform = parse_transform(get_as<std::string>(v["transform"], "transform"));
    } else {
      config_error("variables entries must be strings or objects");
    }
    cfg.variables.push_back(std::move(spec));
  }

  if (root.contains("var")) {
    const json& v = root["var"];
    reject_unknown(v, {"lags", "trend", "dof_adjust"}, "'var'");
    if (v.contains("lags")) cfg.lags = get_as<int>(v["lags"], "var.lags");
    if (v.contains("trend")) cfg.var_options.linear_trend = get_as<bool>(v["trend"], "var.trend");
    if (v.contains("dof_adjust")) cfg.var_options.dof_adjust = get_as<bool>(v["dof_adjust"], "var.dof_adjust");
  }
  if (root.contains("identification")) {
    const json& id = root["identification"];
    reject_unknown(id, {"schemes", "ordering", "weights"}, "'identification'");
    if (id.contains("schemes")) cfg.schemes = get_as<std::vector<std::string>>(id["schemes"], "identification.schemes");
    if (id.contains("ordering")) cfg.ordering = get_as<std::vector<std::string>>(id["ordering"], "identification.ordering");
    if (id.contains("weights")) cfg.weights = get_as<std::vector<double>>(id["weights"], "identification.weights");
  }
  if (root.contains("irf")) {
    const json& v = root["irf"];
    reject_unknown(v, {"horizon", "local_projection"}, "'irf'");
    if (v.contains("horizon")) cfg.horizon = get_as<int>(v["horizon"], "irf.horizon");
    if (v.contains("local_projection")) cfg.local_projection = get_as<bool>(v["local_projection"], "irf.local_projection");
  }
  if (root.contains("scan")) {
    const json& v = root["scan"];
    reject_unknown(v, {"budget", "seed"}, "'scan'");
    if (v.contains("budget")) cfg.scan_budget = get_as<std::uint64_t>(v["budget"], "scan.budget");
    if (v.contains("seed")) cfg.seed = get_as<std::uint64_t>(v["seed"], "scan.seed");
  }
  if (root.contains("proxy")) {
    const json& v = root["proxy"];
    reject_unknown(v, {"subset", "instruments", "weights"}, "'proxy'");
    ProxySpec spec;
    if (v.contains("subset")) spec.subset = get_as<std::vector<std::string>>(v["subset"], "proxy.subset");
    if (v.contains("instruments")) {
      const json& ins = v["instruments"];
      reject_unknown(ins, {"path", "columns"}, "'proxy.instruments'");
      if (!ins.contains("path") || !ins.contains("columns")) config_error("proxy.instruments needs 'path' and 'columns'");
      spec.instruments = InstrumentSpec{resolve(base_dir, get_as<std::string>(ins["path"], "proxy.instruments.path")),
                                        get_as<std::vector<std::string>>(ins["columns"], "proxy.instruments.columns")};
    }
    if (v.contains("weights")) spec.weights = get_as<std::vector<double>>(v["weights"], "proxy.weights");
    if (spec.subset.empty() == !spec.instruments.has_value()) {
      config_error("proxy needs exactly one of 'subset' or 'instruments'");
    }
    cfg.proxy = std::move(spec);
  }
  if (root.contains("output")) cfg.out_dir = resolve(base_dir, get_as<std::string>(root["output"], "output"));
  else cfg.out_dir = base_dir / "out" / cfg.label;
  return cfg;
}

StudyConfig load_config(const fs::path& path) {
  return parse_config(read_text(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

bool is_manifest(const fs::path& path) {
  const json root = parse_json(read_text(path));
  return root.is_object() && root.contains("studies");
}

Manifest load_manifest(const fs::path& path) {
  const json root = parse_json(read_text(path));
  reject_unknown(root, {"studies", "output"}, "manifest");
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  Manifest m;
  for (const auto& s : get_as<std::vector<std::string>>(root["studies"], "studies")) m.studies.push_back(resolve(base, s));
  if (m.studies.empty()) config_error("manifest lists no studies");
  if (root.contains("output")) m.out_dir = resolve(base, get_as<std::string>(root["output"], "output"));
  return m;
}

Ordering resolve_ordering(const StudyConfig& config) {
  const int n = static_cast<int>(config.variables.size());
  if (config.ordering.empty()) return Ordering::identity(n);
  if (static_cast<int>(config.ordering.size()) != n) {
    throw Error(ErrorKind::InvalidPermutation, "ordering must list each variable exactly once");
  }
  std::vector<int> idx;
  for (const std::string& name : config.ordering) {
    int found = -1;
    for (int j = 0; j < n; ++j) {
      if (config.variables[static_cast<std::size_t>(j)].name == name) found = j;
    }
    if (found < 0) throw Error(ErrorKind::InvalidPermutation, "ordering names unknown variable '" + name + "'");
    idx.push_back(found);
  }
  return Ordering(std::move(idx));
}

void validate_config(const StudyConfig& config) {
  std::set<std::string> names;
  for (const auto& v : config.variables) {
    if (v.name.empty()) config_error("empty variable name");
    if (!names.insert(v.name).second) config_error("variable '" + v.name + "' listed twice");
  }
  if (config.lags < 1) config_error("var.lags must be at least 1");
  if (config.horizon < 0) config_error("irf.horizon must be non-negative");
  for (const auto& s : config.schemes) {
    if (s != "oasis" && s != "cholesky" && s != "weighted_oasis") config_error("unknown scheme '" + s + "'");
  }
  resolve_ordering(config);
  const bool wants_weighted =
      std::find(config.schemes.begin(), config.schemes.end(), "weighted_oasis") != config.schemes.end();
  if (wants_weighted && !config.weights) config_error("weighted_oasis requires identification.weights");
  if (config.weights) {
    if (config.weights->size() != config.variables.size()) config_error("one weight per variable is required");
    Weights(Eigen::Map<const Vector>(config.weights->data(), static_cast<Eigen::Index>(config.weights->size())));
  }
  if (config.proxy) {
    for (const auto& s : config.proxy->subset) {
      if (!names.count(s)) throw Error(ErrorKind::UnknownVariable, "proxy subset names unknown variable '" + s + "'");
    }
    const std::size_t r = config.proxy->instruments ? config.proxy->instruments->columns.size() : config.proxy->subset.size();
    if (r == 0 || r > config.variables.size()) config_error("proxy must use between 1 and n instruments");
    if (config.proxy->weights) {
      if (config.proxy->weights->size() != r) config_error("one proxy weight per instrument is required");
      Weights(Eigen::Map<const Vector>(config.proxy->weights->data(), static_cast<Eigen::Index>(r)));
    }
  }
}

}  // namespace oasis
