#include "stelle/metrics.hpp"

#include "stelle/robustness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace stelle {

double local_separability(const Formula& explanation, const Trajectory& target, int k,
                          std::span<const Trajectory> pool) {
  const bool target_sat = satisfied(explanation, target);
  int opposers = 0, differ = 0;
  for (const auto& t : pool) {
    if (!t.label || *t.label == k) continue;
    ++opposers;
    differ += satisfied(explanation, t) != target_sat;
  }
  if (opposers == 0) throw std::invalid_argument("local separability: no trajectory of another class in the pool");
  return 100.0 * differ / opposers;
}

Confusion class_confusion(const Formula& explanation, int k, std::span<const Trajectory> trajs) {
  Confusion c;
  for (const auto& t : trajs) {
    if (!t.label) continue;
    const bool pos = *t.label == k;
    const bool sat = satisfied(explanation, t);
    if (pos && sat) ++c.tp;
    else if (pos) ++c.fn;
    else if (sat) ++c.fp;
    else ++c.tn;
  }
  return c;
}

GlobalSeparability global_separability(const std::map<int, Formula>& expls, std::span<const Trajectory> trajs) {
  GlobalSeparability g;
  long hits = 0, total = 0;
  for (const auto& [k, f] : expls) {
    const Confusion c = class_confusion(f, k, trajs);
    g.per_class[k] = c.total() ? 100.0 * (c.tp + c.tn) / c.total() : 0.0;
    hits += c.tp + c.tn;
    total += c.total();
  }
  g.micro = total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 0.0;
  g.total = total;
  return g;
}

PRF global_prf(const std::map<int, Formula>& expls, std::span<const Trajectory> trajs) {
  PRF out;
  if (expls.empty()) return out;
  for (const auto& [k, f] : expls) {
    const Confusion c = class_confusion(f, k, trajs);
    out.recall += c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    out.specificity += c.tn + c.fp ? static_cast<double>(c.tn) / (c.tn + c.fp) : 0.0;
    if (c.tp + c.fp) out.precision += static_cast<double>(c.tp) / (c.tp + c.fp);
    else out.precision_degenerate = true;
  }
  const double n = static_cast<double>(expls.size());
  out.recall /= n;
  out.specificity /= n;
  out.precision /= n;
  return out;
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd m;
  m.n = static_cast<int>(xs.size());
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= m.n;
  double sq = 0.0;
  for (double x : xs) sq += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(sq / m.n);
  return m;
}

ReadabilityReport readability(std::span<const Formula> formulas, std::span<const std::string> tags) {
  if (formulas.size() != tags.size()) throw std::invalid_argument("readability: one tag per formula");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    auto& [nodes, vars] = groups[tags[i]];
    nodes.push_back(formulas[i].node_count());
    vars.push_back(static_cast<double>(variable_set(formulas[i]).size()));
  }
  ReadabilityReport r;
  for (const auto& [tag, g] : groups) r.rows[tag] = {mean_std(g.first), mean_std(g.second)};
  return r;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

namespace {

std::string pm(const MeanStd& m) {
  if (m.n == 0) return "n/a";
  return format_number(m.mean) + " +- " + format_number(m.std);
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

std::string readability_table(const ReadabilityReport& r) {
  std::ostringstream os;
  os << pad("condition", 20) << pad("nodes", 24) << "variables\n";
  for (const auto& [tag, row] : r.rows) os << pad(tag, 20) << pad(pm(row.nodes), 24) << pm(row.variables) << '\n';
  return os.str();
}

std::string separability_table(const SeparabilityReport& r) {
  std::ostringstream os;
  os << "local separability (%)\n";
  os << "  " << pad("correct", 34) << pm(r.local_correct) << '\n';
  os << "  " << pad("misclassified, predicted class", 34) << pm(r.local_misclassified_predicted) << '\n';
  os << "  " << pad("misclassified, true class", 34) << pm(r.local_misclassified_true) << '\n';
  os << "global separability (%)\n";
  os << "  " << pad("class", 10) << pad("all", 14) << pad("correct", 14) << "misclassified\n";
  const auto cell = [](const GlobalSeparability& g, int k) {
    auto it = g.per_class.find(k);
    return it == g.per_class.end() || g.total == 0 ? std::string("n/a") : format_number(it->second);
  };
  const auto micro = [](const GlobalSeparability& g) { return g.total ? format_number(g.micro) : std::string("n/a"); };
  for (const auto& [k, v] : r.global_all.per_class)
    os << "  " << pad(std::to_string(k), 10) << pad(cell(r.global_all, k), 14) << pad(cell(r.global_correct, k), 14)
       << cell(r.global_misclassified, k) << '\n';
  os << "  " << pad("micro", 10) << pad(micro(r.global_all), 14) << pad(micro(r.global_correct), 14)
     << micro(r.global_misclassified) << '\n';
  return os.str();
}

}  // namespace stelle
