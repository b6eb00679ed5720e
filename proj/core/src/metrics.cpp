#include "persel/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace persel::harness {

using nlohmann::json;

int rank_of_true(const std::vector<double>& scores, int true_index) {
  if (true_index < 0 || true_index >= static_cast<int>(scores.size()))
    throw std::invalid_argument("rank_of_true: index out of range");
  const double s = scores[static_cast<std::size_t>(true_index)];
  int rank = 1;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (i == true_index) continue;
    const double o = scores[static_cast<std::size_t>(i)];
    if (o > s || (o == s && i < true_index)) ++rank;
  }
  return rank;
}

double hits_at_k(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) throw std::invalid_argument("hits_at_k: empty rank list");
  int hit = 0;
  for (int r : ranks) {
    if (r < 1) throw std::invalid_argument("hits_at_k: ranks are 1-based");
    if (r <= k) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

double mrr(const std::vector<int>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("mrr: empty rank list");
  double acc = 0.0;
  for (int r : ranks) {
    if (r < 1) throw std::invalid_argument("mrr: ranks are 1-based");
    acc += 1.0 / static_cast<double>(r);
  }
  return acc / static_cast<double>(ranks.size());
}

void RankingReport::finalize() {
  std::vector<int> ranks;
  ranks.reserve(per_example.size());
  for (const auto& e : per_example) ranks.push_back(e.rank);
  n = static_cast<int>(per_example.size());
  hits1 = hits_at_k(ranks, 1);
  hits5 = hits_at_k(ranks, 5);
  mrr = harness::mrr(ranks);
}

void write_report_tsv(const RankingReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "example_id\trank\tscore_true\thits1\n";
  char buf[64];
  for (const auto& e : report.per_example) {
    std::snprintf(buf, sizeof(buf), "%.9g", e.score_true);
    out << e.id << "\t" << e.rank << "\t" << buf << "\t" << (e.rank == 1 ? 1 : 0) << "\n";
  }
}

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_report_json(const RankingReport& report, const std::string& path) {
  json j;
  // aggregates serialize as fixed-precision strings parsed back on load so
  // byte-identical output does not depend on double formatting quirks
  j["hits1"] = std::stod(fixed6(report.hits1));
  j["hits5"] = std::stod(fixed6(report.hits5));
  j["mrr"] = std::stod(fixed6(report.mrr));
  j["n"] = report.n;
  j["config_hash"] = report.config_hash;
  j["corpus_hash"] = report.corpus_hash;
  j["seed"] = report.seed;
  j["family"] = report.family;
  j["strategy"] = report.strategy;
  j["persona_side"] = report.persona_side;
  j["persona_version"] = report.persona_version;
  j["ablate_context"] = report.ablate_context;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << j.dump(2) << "\n";
}

RankingReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  json j;
  in >> j;
  RankingReport r;
  r.hits1 = j.at("hits1").get<double>();
  r.hits5 = j.at("hits5").get<double>();
  r.mrr = j.at("mrr").get<double>();
  r.n = j.at("n").get<int>();
  r.config_hash = j.value("config_hash", "");
  r.corpus_hash = j.value("corpus_hash", "");
  r.seed = j.value("seed", std::uint64_t{0});
  r.family = j.value("family", "");
  r.strategy = j.value("strategy", "");
  r.persona_side = j.value("persona_side", "");
  r.persona_version = j.value("persona_version", "");
  r.ablate_context = j.value("ablate_context", false);
  return r;
}

}  // namespace persel::harness
