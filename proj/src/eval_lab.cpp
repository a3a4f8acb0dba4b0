#include "atom/eval_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "atom/data_paths.hpp"
#include "atom/text.hpp"

namespace atom::eval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Segmentation

std::vector<std::string> segment(const std::string& raw) {
  static const std::vector<std::string> kDefault = {".", ";", "!", "?",
                                                    "。", "；", "！", "？", "、"};
  return segment(raw, kDefault);
}

std::vector<std::string> segment(const std::string& raw,
                                 const std::vector<std::string>& delimiters) {
  std::vector<std::string> out;
  std::string current;
  size_t i = 0;
  while (i < raw.size()) {
    bool matched = false;
    for (const auto& d : delimiters) {
      if (!d.empty() && raw.compare(i, d.size(), d) == 0) {
        const std::string unit = text::trim(current);
        if (!unit.empty()) out.push_back(unit);
        current.clear();
        i += d.size();
        matched = true;
        break;
      }
    }
    if (!matched) current.push_back(raw[i++]);
  }
  const std::string unit = text::trim(current);
  if (!unit.empty()) out.push_back(unit);
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

std::vector<Vec> LocalHashEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Vec> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto tokens = text::tokenize(t);
    if (tokens.empty())
      throw EvalError(EvalError::Kind::ProviderError, "cannot embed a text with no tokens");
    Vec v(static_cast<size_t>(dimension_), 0.0);
    for (const auto& tok : tokens) {
      const std::uint64_t h = text::fnv1a64(tok);
      const size_t idx = static_cast<size_t>(h % static_cast<std::uint64_t>(dimension_));
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[idx] += sign;
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0)
      throw EvalError(EvalError::Kind::ProviderError, "degenerate embedding (zero vector)");
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

std::vector<Vec> RemoteEmbedder::embed(const std::vector<std::string>& texts) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos)
    throw EvalError(EvalError::Kind::ProviderError, "endpoint URL missing scheme: " + endpoint_);
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  const std::string host = endpoint_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  httplib::Client client(host);
  httplib::Headers headers;
  if (const char* key = std::getenv("ATOM_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);
  const json payload = {{"model", model_}, {"input", texts}};
  auto res = client.Post(path, headers, payload.dump(), "application/json");
  if (!res || res->status < 200 || res->status >= 300)
    throw EvalError(EvalError::Kind::ProviderError,
                    "embedding endpoint failure: " + (res ? std::to_string(res->status)
                                                          : httplib::to_string(res.error())));
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.contains("data"))
    throw EvalError(EvalError::Kind::ProviderError, "malformed embedding response");
  std::vector<Vec> out;
  size_t dim = 0;
  for (const auto& item : body["data"]) {
    Vec v = item.at("embedding").get<Vec>();
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw EvalError(EvalError::Kind::DimensionMismatch, "mixed embedding dimensions in batch");
    out.push_back(std::move(v));
  }
  if (out.size() != texts.size())
    throw EvalError(EvalError::Kind::ProviderError, "embedding count mismatch");
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw EvalError(EvalError::Kind::DimensionMismatch, "cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double sq_dist(const Vec& a, const Vec& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_uniform_dims(const std::vector<Vec>& vectors) {
  for (const auto& v : vectors)
    if (v.size() != vectors.front().size())
      throw EvalError(EvalError::Kind::DimensionMismatch, "vectors have mixed dimensions");
}

}  // namespace

ClusterModel kmeans(const std::vector<Vec>& vectors, int k, std::uint64_t seed) {
  const size_t n = vectors.size();
  if (k < 1 || static_cast<size_t>(k) > n)
    throw EvalError(EvalError::Kind::InsufficientPoints,
                    "kmeans: k=" + std::to_string(k) + " with n=" + std::to_string(n));
  check_uniform_dims(vectors);

  text::Rng rng(seed);
  ClusterModel model;
  model.k = k;

  // k-means++ seeding
  model.centroids.push_back(vectors[rng.next_index(n)]);
  std::vector<double> d2(n);
  while (model.centroids.size() < static_cast<size_t>(k)) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : model.centroids) best = std::min(best, sq_dist(vectors[i], c));
      d2[i] = best;
      total += best;
    }
    if (total == 0.0) {
      model.centroids.push_back(vectors[rng.next_index(n)]);
      continue;
    }
    double target = rng.next_double() * total;
    size_t pick = n - 1;
    for (size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0) {
        pick = i;
        break;
      }
    }
    model.centroids.push_back(vectors[pick]);
  }

  model.assignment.assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    // assign
    bool changed = false;
    double sse = 0;
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(vectors[i], model.centroids[static_cast<size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (model.assignment[i] != best) {
        model.assignment[i] = best;
        changed = true;
      }
      sse += best_d;
    }
    if (!model.sse_history.empty() && sse > model.sse_history.back() + 1e-9)
      throw std::logic_error("kmeans objective increased between iterations");
    model.sse_history.push_back(sse);
    model.sse = sse;
    if (!changed) break;

    // update
    const size_t dim = vectors.front().size();
    std::vector<Vec> sums(static_cast<size_t>(k), Vec(dim, 0.0));
    std::vector<size_t> counts(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < n; ++i) {
      const auto c = static_cast<size_t>(model.assignment[i]);
      ++counts[c];
      for (size_t d = 0; d < dim; ++d) sums[c][d] += vectors[i][d];
    }
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<size_t>(c);
      if (counts[cu] == 0) {
        // empty cluster: reseed from the globally farthest point
        size_t far = 0;
        double far_d = -1;
        for (size_t i = 0; i < n; ++i) {
          const double d =
              sq_dist(vectors[i], model.centroids[static_cast<size_t>(model.assignment[i])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        model.centroids[cu] = vectors[far];
      } else {
        for (size_t d = 0; d < dim; ++d)
          model.centroids[cu][d] = sums[cu][d] / static_cast<double>(counts[cu]);
      }
    }
  }
  return model;
}

std::vector<Cluster> clusters_of(const ClusterModel& model) {
  std::vector<Cluster> out(static_cast<size_t>(model.k));
  for (int c = 0; c < model.k; ++c) out[static_cast<size_t>(c)].id = c;
  for (size_t i = 0; i < model.assignment.size(); ++i)
    out[static_cast<size_t>(model.assignment[i])].members.push_back(i);
  for (auto& cluster : out) cluster.centroid = model.centroids[static_cast<size_t>(cluster.id)];
  return out;
}

ElbowResult select_k_elbow(const std::vector<Vec>& vectors, int k_lo, int k_hi) {
  const int n = static_cast<int>(vectors.size());
  if (k_lo < 2 || k_hi < k_lo || k_hi > n)
    throw EvalError(EvalError::Kind::InsufficientPoints,
                    "select_k_elbow: range [" + std::to_string(k_lo) + "," + std::to_string(k_hi) +
                        "] invalid for n=" + std::to_string(n));

  std::map<int, double> sse;
  for (int k = k_lo; k <= k_hi; ++k) {
    double best = std::numeric_limits<double>::max();
    for (std::uint64_t restart = 0; restart < 4; ++restart) {
      const auto model = kmeans(
          vectors, k, text::Rng::derive(0xE1B0Eull + static_cast<std::uint64_t>(k), restart));
      best = std::min(best, model.sse);
    }
    sse[k] = best;
  }

  // curvature argmax over interior points; a flat curve has no knee and
  // falls back to the smallest k in the range
  int raw = k_lo;
  double best_curv = -std::numeric_limits<double>::max();
  for (int k = k_lo + 1; k <= k_hi - 1; ++k) {
    const double curv = sse[k - 1] - 2.0 * sse[k] + sse[k + 1];
    if (curv > best_curv + 1e-12) {
      best_curv = curv;
      raw = k;
    }
  }
  const double scale = std::max(1.0, std::abs(sse[k_lo]));
  if (best_curv <= 1e-12 * scale) raw = k_lo;

  ElbowResult result;
  result.raw_k = raw;
  result.k = std::clamp(raw, 3, 5);
  result.clamped = result.k != raw;
  if (result.clamped)
    result.notice = "elbow k=" + std::to_string(raw) + " clamped to " + std::to_string(result.k);
  return result;
}

int assign_cluster(const Vec& robot, const ClusterModel& model) {
  int best = 0;
  double best_sim = -std::numeric_limits<double>::max();
  for (int c = 0; c < model.k; ++c) {
    const double s = cosine(robot, model.centroids[static_cast<size_t>(c)]);
    if (s > best_sim) {  // ties keep the lower id
      best_sim = s;
      best = c;
    }
  }
  return best;
}

double avg_sim(const Vec& robot, const Cluster& cluster, const std::vector<Vec>& corpus) {
  if (cluster.members.empty())
    throw EvalError(EvalError::Kind::EmptyCluster, "avg_sim: empty cluster");
  double total = 0;
  for (size_t idx : cluster.members) total += cosine(robot, corpus[idx]);
  return total / static_cast<double>(cluster.members.size());
}

double proportion_rate(const Cluster& cluster, std::size_t total_units) {
  if (cluster.members.empty() || total_units < cluster.members.size())
    throw EvalError(EvalError::Kind::EmptyCluster,
                    "proportion_rate: need n >= |cluster| >= 1");
  return static_cast<double>(cluster.members.size()) / static_cast<double>(total_units);
}

// ---------------------------------------------------------------------------
// Likert

LikertStats likert_stats(const std::vector<int>& samples) {
  if (samples.empty()) throw EvalError(EvalError::Kind::EmptySamples, "likert_stats: no samples");
  double sum = 0;
  for (int s : samples) {
    if (s < 1 || s > 7)
      throw EvalError(EvalError::Kind::OutOfRange,
                      "likert sample out of 1..7: " + std::to_string(s));
    sum += s;
  }
  LikertStats stats;
  stats.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0;
    for (int s : samples) ss += (s - stats.mean) * (s - stats.mean);
    stats.sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  stats.percent = stats.mean / 7.0 * 100.0;
  return stats;
}

double headline_percent(double mean) {
  return std::floor(mean / 7.0 * 1000.0) / 10.0;
}

// ---------------------------------------------------------------------------
// Ablation

AblationReport ablation_report(const std::map<PromptVariant, AblationCell>& cells) {
  for (PromptVariant v :
       {PromptVariant::full_atom_constraints, PromptVariant::no_atom_no_constraints,
        PromptVariant::atom_no_constraints, PromptVariant::no_atom_constraints}) {
    if (!cells.count(v))
      throw EvalError(EvalError::Kind::MissingCell, "ablation grid missing cell: " + to_string(v));
  }
  AblationReport r;
  r.cells = cells;
  const auto& full = cells.at(PromptVariant::full_atom_constraints);
  const auto& no_atom = cells.at(PromptVariant::no_atom_constraints);
  const auto& no_constraints = cells.at(PromptVariant::atom_no_constraints);
  r.atom_removal_need_delta = full.need_sim - no_atom.need_sim;
  r.atom_removal_sol_delta = full.sol_sim - no_atom.sol_sim;
  r.constraint_removal_need_delta = full.need_sim - no_constraints.need_sim;
  r.constraint_removal_sol_delta = full.sol_sim - no_constraints.sol_sim;
  return r;
}

namespace {
std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", v);
  return buf;
}
}  // namespace

std::string AblationReport::to_markdown() const {
  const auto& c = cells;
  std::ostringstream md;
  md << "| Need similarity | w/o AToM | w/ AToM |\n|---|---|---|\n";
  md << "| w/o Constraints | " << pct(c.at(PromptVariant::no_atom_no_constraints).need_sim)
     << " | " << pct(c.at(PromptVariant::atom_no_constraints).need_sim) << " |\n";
  md << "| w/ Constraints | " << pct(c.at(PromptVariant::no_atom_constraints).need_sim) << " | "
     << pct(c.at(PromptVariant::full_atom_constraints).need_sim) << " |\n\n";
  md << "| Solution similarity | w/o AToM | w/ AToM |\n|---|---|---|\n";
  md << "| w/o Constraints | " << pct(c.at(PromptVariant::no_atom_no_constraints).sol_sim) << " | "
     << pct(c.at(PromptVariant::atom_no_constraints).sol_sim) << " |\n";
  md << "| w/ Constraints | " << pct(c.at(PromptVariant::no_atom_constraints).sol_sim) << " | "
     << pct(c.at(PromptVariant::full_atom_constraints).sol_sim) << " |\n\n";
  md << "AToM removal lowers need similarity by " << pct(atom_removal_need_delta)
     << " and solution similarity by " << pct(atom_removal_sol_delta) << ".\n";
  md << "Constraint removal lowers need similarity by " << pct(constraint_removal_need_delta)
     << " and solution similarity by " << pct(constraint_removal_sol_delta) << ".\n";
  return md.str();
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

std::vector<std::vector<std::string>> parse_csv_rows(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  size_t i = 0;
  while (i < content.size()) {
    const char ch = content[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(field);
      field.clear();
    } else if (ch == '\n') {
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<ResponseRow> parse_corpus_csv(const std::string& content) {
  const auto rows = parse_csv_rows(content);
  if (rows.empty())
    throw EvalError(EvalError::Kind::CorpusSchema, "corpus: empty file");

  const std::vector<std::string> expected = {"participant_id", "task_id", "stage", "text",
                                             "likert"};
  const auto& header = rows.front();
  for (const auto& col : expected) {
    if (std::find(header.begin(), header.end(), col) == header.end())
      throw EvalError(EvalError::Kind::CorpusSchema, "corpus line 1: missing column '" + col + "'");
  }
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i) col[text::trim(header[i])] = i;

  std::vector<ResponseRow> out;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::string line = std::to_string(r + 1);
    if (cells.size() == 1 && text::trim(cells[0]).empty()) continue;
    if (cells.size() < header.size())
      throw EvalError(EvalError::Kind::CorpusSchema,
                      "corpus line " + line + ": expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(cells.size()));
    ResponseRow row;
    row.participant_id = cells[col["participant_id"]];
    try {
      row.task_id = std::stoi(cells[col["task_id"]]);
    } catch (...) {
      throw EvalError(EvalError::Kind::CorpusSchema,
                      "corpus line " + line + ": task_id is not an integer");
    }
    row.stage = text::trim(cells[col["stage"]]);
    if (row.stage != "need" && row.stage != "solution" && row.stage != "execution")
      throw EvalError(EvalError::Kind::CorpusSchema,
                      "corpus line " + line + ": stage must be need|solution|execution");
    row.text = cells[col["text"]];
    try {
      row.likert = std::stoi(cells[col["likert"]]);
    } catch (...) {
      throw EvalError(EvalError::Kind::CorpusSchema,
                      "corpus line " + line + ": likert is not an integer");
    }
    if (row.likert < 1 || row.likert > 7)
      throw EvalError(EvalError::Kind::CorpusSchema,
                      "corpus line " + line + ": likert out of 1..7");
    if (row.stage != "execution" && text::trim(row.text).empty())
      throw EvalError(EvalError::Kind::CorpusSchema, "corpus line " + line + ": empty text");
    if (auto it = col.find("lang"); it != col.end() && it->second < cells.size()) {
      const std::string lang = text::trim(cells[it->second]);
      if (!lang.empty()) row.lang = lang;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ResponseRow> load_corpus_csv(const std::filesystem::path& file) {
  return parse_corpus_csv(read_file(file));
}

// ---------------------------------------------------------------------------
// Per-task evaluation

SimilarityReport evaluate_task(const std::vector<HumanResponseUnit>& units,
                               const RobotResponse& robot, const std::vector<int>& likerts,
                               std::uint64_t seed, SimilarityMode mode) {
  if (units.empty())
    throw EvalError(EvalError::Kind::InsufficientPoints, "evaluate_task: no human units");
  std::vector<Vec> corpus;
  for (const auto& u : units) corpus.push_back(u.vector);

  const int n = static_cast<int>(units.size());
  SimilarityReport report;
  report.task_id = robot.task_id;
  report.stage = robot.stage;

  int k = 1;
  if (n >= 2) {
    const auto elbow = select_k_elbow(corpus, 2, std::min(8, n));
    report.k_clamped = elbow.clamped;
    k = std::min(elbow.k, n);
  }
  report.k = k;

  ClusterModel model = kmeans(corpus, k, text::Rng::derive(seed, 1));
  report.clusters = clusters_of(model);

  int target;
  if (mode == SimilarityMode::assigned_cluster) {
    target = assign_cluster(robot.vector, model);
    if (report.clusters[static_cast<size_t>(target)].members.empty()) {
      // stale centroid with no members; fall back to the nearest real cluster
      double best_sim = -std::numeric_limits<double>::max();
      for (const auto& c : report.clusters) {
        if (c.members.empty()) continue;
        const double s = cosine(robot.vector, c.centroid);
        if (s > best_sim) {
          best_sim = s;
          target = c.id;
        }
      }
    }
  } else {
    // the need most frequently identified by humans
    target = 0;
    size_t best = 0;
    for (const auto& c : report.clusters) {
      if (c.members.size() > best) {
        best = c.members.size();
        target = c.id;
      }
    }
  }
  report.assigned_cluster = target;

  const Cluster& cluster = report.clusters[static_cast<size_t>(target)];
  report.avg_sim = avg_sim(robot.vector, cluster, corpus);
  report.proportion = proportion_rate(cluster, corpus.size());

  if (!likerts.empty()) {
    const LikertStats stats = likert_stats(likerts);
    report.likert_mean = stats.mean;
    report.likert_sd = stats.sd;
  }
  return report;
}

}  // namespace atom::eval
