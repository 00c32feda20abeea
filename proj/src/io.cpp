#include "stelle/io.hpp"

#include "stelle/parser.hpp"
#include "stelle/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace stelle {

using nlohmann::json;

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  for (const auto& t : trajectories) {
    if (!t.label) throw std::invalid_argument("dataset: trajectory '" + t.id + "' has no label");
    out.push_back(*t.label);
  }
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

/// Numeric order when every key is a number, otherwise lexicographic.
std::vector<std::string> ordered_keys(std::vector<std::string> keys) {
  const bool numeric = std::all_of(keys.begin(), keys.end(), [](const auto& k) { return parse_double(k).has_value(); });
  if (numeric)
    std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return *parse_double(a) < *parse_double(b); });
  else
    std::sort(keys.begin(), keys.end());
  return keys;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_dataset(std::istream& is) {
  struct Row {
    std::string id, label, channel;
    std::vector<double> values;
    int line;
  };
  std::vector<Row> rows;
  std::string line;
  int lineno = 0;
  std::optional<std::size_t> length;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (rows.empty() && !cells.empty() && cells[0] == "id") continue;
    if (cells.size() < 4)
      throw std::runtime_error("dataset: line " + std::to_string(lineno) + " needs id, label, channel and at least one value");
    Row r{cells[0], cells[1], cells[2], {}, lineno};
    if (r.id.empty()) throw std::runtime_error("dataset: line " + std::to_string(lineno) + " has an empty id");
    for (std::size_t i = 3; i < cells.size(); ++i) {
      auto v = parse_double(cells[i]);
      if (!v || !std::isfinite(*v))
        throw std::runtime_error("dataset: line " + std::to_string(lineno) + ", column " + std::to_string(i + 1) +
                                 ": '" + cells[i] + "' is not a finite number");
      r.values.push_back(*v);
    }
    if (length && *length != r.values.size())
      throw std::runtime_error("dataset: line " + std::to_string(lineno) + " has " + std::to_string(r.values.size()) +
                               " values, expected " + std::to_string(*length));
    length = r.values.size();
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("dataset: no data rows");

  std::vector<std::string> labels, channels, ids;
  std::unordered_map<std::string, std::size_t> id_index;
  for (const auto& r : rows) {
    if (!r.label.empty() && std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
    if (std::find(channels.begin(), channels.end(), r.channel) == channels.end()) channels.push_back(r.channel);
    if (id_index.emplace(r.id, ids.size()).second) ids.push_back(r.id);
  }
  Dataset ds;
  ds.class_names = ordered_keys(labels);
  ds.channel_names = ordered_keys(channels);
  std::map<std::string, int> label_of, channel_of;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) label_of[ds.class_names[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < ds.channel_names.size(); ++i) channel_of[ds.channel_names[i]] = static_cast<int>(i);

  const auto d = static_cast<Eigen::Index>(channels.size());
  const auto L = static_cast<Eigen::Index>(*length);
  ds.trajectories.resize(ids.size());
  std::vector<std::vector<char>> seen(ids.size(), std::vector<char>(channels.size(), 0));
  std::vector<std::string> label_text(ids.size());
  std::vector<char> has_label(ids.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ds.trajectories[i].id = ids[i];
    ds.trajectories[i].values.resize(d, L);
  }
  for (const auto& r : rows) {
    const std::size_t t = id_index[r.id];
    const int c = channel_of[r.channel];
    if (seen[t][static_cast<std::size_t>(c)])
      throw std::runtime_error("dataset: line " + std::to_string(r.line) + " repeats channel '" + r.channel +
                               "' of trajectory '" + r.id + "'");
    seen[t][static_cast<std::size_t>(c)] = 1;
    if (has_label[t] && label_text[t] != r.label)
      throw std::runtime_error("dataset: line " + std::to_string(r.line) + " gives trajectory '" + r.id +
                               "' a second label");
    has_label[t] = 1;
    label_text[t] = r.label;
    for (Eigen::Index j = 0; j < L; ++j) ds.trajectories[t].values(c, j) = r.values[static_cast<std::size_t>(j)];
  }
  for (std::size_t t = 0; t < ids.size(); ++t) {
    for (std::size_t c = 0; c < channels.size(); ++c)
      if (!seen[t][c])
        throw std::runtime_error("dataset: trajectory '" + ids[t] + "' lacks channel '" + ds.channel_names[c] + "'");
    if (!label_text[t].empty()) ds.trajectories[t].label = label_of[label_text[t]];
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return load_dataset(in);
}

void remap_labels(Dataset& ds, const std::vector<std::string>& class_names) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = static_cast<int>(i);
  for (auto& t : ds.trajectories) {
    if (!t.label) continue;
    const std::string& name = ds.class_names[static_cast<std::size_t>(*t.label)];
    auto it = index.find(name);
    if (it == index.end()) throw std::runtime_error("dataset: label '" + name + "' is not a known class");
    t.label = it->second;
  }
  ds.class_names = class_names;
}

void save_dataset(std::ostream& os, const Dataset& ds) {
  os << "id,label,channel";
  for (int j = 0; j < ds.length(); ++j) os << ",v" << j;
  os << '\n';
  for (const auto& t : ds.trajectories) {
    const std::string label = t.label ? ds.class_names[static_cast<std::size_t>(*t.label)] : "";
    for (Eigen::Index c = 0; c < t.values.rows(); ++c) {
      os << t.id << ',' << label << ',' << ds.channel_names[static_cast<std::size_t>(c)];
      for (Eigen::Index j = 0; j < t.values.cols(); ++j) os << ',' << format_double(t.values(c, j));
      os << '\n';
    }
  }
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  save_dataset(out, ds);
}

PreprocessStats fit_preprocess(const Dataset& train, const PreprocessConfig& cfg) {
  if (train.trajectories.empty()) throw std::invalid_argument("preprocess: empty training set");
  const int d = train.channels();
  const int L = train.length();
  const auto n = static_cast<Eigen::Index>(train.trajectories.size());
  // channel x (trajectory, time) view
  MatX flat(d, n * L);
  for (Eigen::Index i = 0; i < n; ++i) flat.middleCols(i * L, L) = train.trajectories[static_cast<std::size_t>(i)].values;

  PreprocessStats s;
  s.channel_names = train.channel_names;
  s.mean = flat.rowwise().mean();
  const MatX centred = flat.colwise() - s.mean;
  s.std = (centred.array().square().rowwise().sum() / static_cast<double>(flat.cols())).sqrt().matrix();
  for (int c = 0; c < d; ++c) {
    if (s.std[c] < cfg.std_floor) {
      s.warnings.push_back("channel '" + train.channel_names[static_cast<std::size_t>(c)] +
                           "' has near-zero variance; std floored");
      s.std[c] = cfg.std_floor;
    }
  }
  const VecX magnitude = flat.cwiseAbs().rowwise().mean();

  struct Pair {
    double r;
    int a, b;
  };
  std::vector<Pair> pairs;
  const VecX norms = centred.rowwise().norm();
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      const double den = norms[a] * norms[b];
      const double r = den > 0.0 ? centred.row(a).dot(centred.row(b)) / den : 0.0;
      if (std::abs(r) > cfg.correlation_threshold) pairs.push_back({std::abs(r), a, b});
    }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.r > y.r; });
  std::vector<char> keep(static_cast<std::size_t>(d), 1);
  for (const auto& p : pairs) {
    if (!keep[static_cast<std::size_t>(p.a)] || !keep[static_cast<std::size_t>(p.b)]) continue;
    // the larger mean magnitude wins; ties keep the lower index
    const int drop = magnitude[p.b] > magnitude[p.a] ? p.a : p.b;
    keep[static_cast<std::size_t>(drop)] = 0;
  }
  for (int c = 0; c < d; ++c)
    if (keep[static_cast<std::size_t>(c)]) s.kept.push_back(c);
  return s;
}

Dataset apply_preprocess(const Dataset& ds, const PreprocessStats& stats) {
  if (ds.channels() != static_cast<int>(stats.mean.size()))
    throw std::invalid_argument("preprocess: dataset has " + std::to_string(ds.channels()) + " channels, stats expect " +
                                std::to_string(stats.mean.size()));
  Dataset out;
  out.class_names = ds.class_names;
  for (int c : stats.kept) out.channel_names.push_back(ds.channel_names[static_cast<std::size_t>(c)]);
  for (const auto& t : ds.trajectories) {
    Trajectory u;
    u.id = t.id;
    u.label = t.label;
    u.values.resize(static_cast<Eigen::Index>(stats.kept.size()), t.values.cols());
    for (std::size_t k = 0; k < stats.kept.size(); ++k) {
      const int c = stats.kept[k];
      u.values.row(static_cast<Eigen::Index>(k)) = (t.values.row(c).array() - stats.mean[c]) / stats.std[c];
    }
    out.trajectories.push_back(std::move(u));
  }
  return out;
}

namespace {

json mat_json(const MatX& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatX json_mat(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r * c) throw std::runtime_error("model: matrix size mismatch");
  MatX m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[static_cast<std::size_t>(i * c + k)].get<double>();
  return m;
}

json vec_json(const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VecX json_vec(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const VecX>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

}  // namespace

void save_model(std::ostream& os, const SavedModel& m) {
  const ModelState& s = m.state;
  json j;
  j["format"] = "stelle-model";
  j["version"] = 1;
  j["class_names"] = m.class_names;
  std::vector<std::string> concepts;
  for (const auto& f : s.concepts.formulas) concepts.push_back(to_string(f));
  j["concepts"] = {{"source_length", s.concepts.source_length}, {"formulas", concepts}};
  j["mode"] = s.mode == EmbeddingMode::Kernel ? "kernel" : "robustness";
  const Mu0Params& mu = s.kernel.mu0;
  j["kernel"] = {{"mc_trajectories", s.kernel.mc_trajectories},
                 {"epsilon", s.kernel.epsilon},
                 {"mu0",
                  {{"a", mu.a},
                   {"b", mu.b},
                   {"delta", mu.delta},
                   {"start_mean", mu.start_mean},
                   {"variation_mean", mu.variation_mean},
                   {"start_std", mu.start_std},
                   {"variation_std", mu.variation_std},
                   {"flip_probability", mu.flip_probability},
                   {"seed", mu.seed}}}};
  j["class_stats"] = {{"mu", mat_json(s.class_stats.mu)},
                      {"sigma", mat_json(s.class_stats.sigma)},
                      {"counts", s.class_stats.counts}};
  j["embed_stats"] = {{"mean", vec_json(s.embed_stats.mean)}, {"std", vec_json(s.embed_stats.std)}};
  j["scalars"] = {{"T", s.T},           {"log_eps", s.log_eps},       {"eps_G", s.eps_G},
                  {"lambda_T", s.lambda_T}, {"lambda_eps", s.lambda_eps}, {"t_rel", s.t_rel}};
  j["shape"] = {{"K", s.K}, {"C", s.C}, {"channels", s.channels}, {"length", s.length}};
  json layers = json::array();
  for (const auto& l : s.mlp.layers) layers.push_back({{"W", mat_json(l.W)}, {"b", vec_json(l.b)}});
  j["mlp"] = {{"input_dim", s.spec.input_dim},
              {"output_dim", s.spec.output_dim},
              {"hidden_dims", s.spec.hidden_dims},
              {"dropout", s.spec.dropout_rate},
              {"layers", layers}};
  json ref = json::array();
  for (const auto& t : s.reference)
    ref.push_back({{"id", t.id}, {"label", t.label ? json(*t.label) : json(nullptr)}, {"values", mat_json(t.values)}});
  j["reference"] = ref;
  const PreprocessStats& p = m.preprocess;
  j["preprocess"] = {{"mean", vec_json(p.mean)},
                     {"std", vec_json(p.std)},
                     {"kept", p.kept},
                     {"channel_names", p.channel_names}};
  os << j.dump() << '\n';
}

void save_model(const std::string& path, const SavedModel& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model '" + path + "'");
  save_model(out, m);
}

SavedModel load_model(std::istream& is) {
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model: malformed JSON: ") + e.what());
  }
  if (j.value("format", "") != "stelle-model") throw std::runtime_error("model: not a model file");
  if (j.value("version", 0) != 1) throw std::runtime_error("model: unsupported version");
  try {
    SavedModel m;
    ModelState& s = m.state;
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    s.concepts.source_length = j.at("concepts").at("source_length").get<int>();
    for (const auto& text : j.at("concepts").at("formulas")) s.concepts.formulas.push_back(parse(text.get<std::string>()));
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "kernel" && mode != "robustness") throw std::runtime_error("model: unknown mode '" + mode + "'");
    s.mode = mode == "kernel" ? EmbeddingMode::Kernel : EmbeddingMode::Robustness;
    const json& k = j.at("kernel");
    s.kernel.mc_trajectories = k.at("mc_trajectories").get<int>();
    s.kernel.epsilon = k.at("epsilon").get<double>();
    const json& mu = k.at("mu0");
    s.kernel.mu0.a = mu.at("a").get<int>();
    s.kernel.mu0.b = mu.at("b").get<int>();
    s.kernel.mu0.delta = mu.at("delta").get<int>();
    s.kernel.mu0.start_mean = mu.at("start_mean").get<double>();
    s.kernel.mu0.variation_mean = mu.at("variation_mean").get<double>();
    s.kernel.mu0.start_std = mu.at("start_std").get<double>();
    s.kernel.mu0.variation_std = mu.at("variation_std").get<double>();
    s.kernel.mu0.flip_probability = mu.at("flip_probability").get<double>();
    s.kernel.mu0.seed = mu.at("seed").get<std::uint64_t>();
    s.class_stats.mu = json_mat(j.at("class_stats").at("mu"));
    s.class_stats.sigma = json_mat(j.at("class_stats").at("sigma"));
    s.class_stats.counts = j.at("class_stats").at("counts").get<std::vector<int>>();
    s.embed_stats.mean = json_vec(j.at("embed_stats").at("mean"));
    s.embed_stats.std = json_vec(j.at("embed_stats").at("std"));
    const json& sc = j.at("scalars");
    s.T = sc.at("T").get<double>();
    s.log_eps = sc.at("log_eps").get<double>();
    s.eps_G = sc.at("eps_G").get<double>();
    s.lambda_T = sc.at("lambda_T").get<double>();
    s.lambda_eps = sc.at("lambda_eps").get<double>();
    s.t_rel = sc.at("t_rel").get<double>();
    const json& sh = j.at("shape");
    s.K = sh.at("K").get<int>();
    s.C = sh.at("C").get<int>();
    s.channels = sh.at("channels").get<int>();
    s.length = sh.at("length").get<int>();
    const json& nn = j.at("mlp");
    s.spec.input_dim = nn.at("input_dim").get<int>();
    s.spec.output_dim = nn.at("output_dim").get<int>();
    s.spec.hidden_dims = nn.at("hidden_dims").get<std::vector<int>>();
    s.spec.dropout_rate = nn.at("dropout").get<double>();
    for (const auto& l : nn.at("layers")) s.mlp.layers.push_back({json_mat(l.at("W")), json_vec(l.at("b"))});
    if (static_cast<int>(s.mlp.layers.size()) != s.spec.layers()) throw std::runtime_error("model: layer count mismatch");
    for (const auto& r : j.at("reference")) {
      Trajectory t;
      t.id = r.at("id").get<std::string>();
      if (!r.at("label").is_null()) t.label = r.at("label").get<int>();
      t.values = json_mat(r.at("values"));
      s.reference.push_back(std::move(t));
    }
    const json& p = j.at("preprocess");
    m.preprocess.mean = json_vec(p.at("mean"));
    m.preprocess.std = json_vec(p.at("std"));
    m.preprocess.kept = p.at("kept").get<std::vector<int>>();
    m.preprocess.channel_names = p.at("channel_names").get<std::vector<std::string>>();
    if (static_cast<int>(s.concepts.size()) != s.C) throw std::runtime_error("model: concept count mismatch");
    s.prepare();
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model '" + path + "'");
  return load_model(in);
}

Dataset make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.per_class < 1) throw std::invalid_argument("synthetic: per_class must be >= 1");
  if (cfg.window_lo < 0 || cfg.window_hi < cfg.window_lo + 2 || cfg.window_hi + 30 >= cfg.length)
    throw std::invalid_argument("synthetic: window must leave room for an off-window pulse");
  Dataset ds;
  ds.channel_names = {"0", "1"};
  ds.class_names = {"0", "1"};
  Rng rng(cfg.seed);
  const int n = 2 * cfg.per_class;
  for (int i = 0; i < n; ++i) {
    // alternate classes so any prefix stays balanced
    const int label = i % 2;
    Trajectory t;
    t.id = "s" + std::to_string(i);
    t.label = label;
    t.values.resize(2, cfg.length);
    for (Eigen::Index c = 0; c < 2; ++c)
      for (Eigen::Index j = 0; j < cfg.length; ++j) t.values(c, j) = std::clamp(rng.normal(0.0, cfg.noise_std), -1.0, 1.0);
    const int width = 3 + static_cast<int>(rng.below(3));
    if (label == 0 && !cfg.decoy) {
      ds.trajectories.push_back(std::move(t));
      continue;
    }
    int start;
    if (label == 1) {
      start = cfg.window_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.window_hi - cfg.window_lo - width + 2)));
    } else {
      const int lo = cfg.window_hi + 15;
      start = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.length - width - lo)));
    }
    for (int j = start; j < start + width; ++j) t.values(0, j) += cfg.pulse_height;
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

}  // namespace stelle
