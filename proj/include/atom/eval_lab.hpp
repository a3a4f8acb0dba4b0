#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "atom/variant.hpp"

namespace atom::eval {

using Vec = std::vector<double>;

class EvalError : public std::runtime_error {
 public:
  enum class Kind {
    ProviderError,
    DimensionMismatch,
    InsufficientPoints,
    EmptyCluster,
    EmptySamples,
    OutOfRange,
    MissingCell,
    CorpusSchema,
  };
  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Segmentation

/// Splits on sentence punctuation (ASCII and CJK), trims, drops empties.
std::vector<std::string> segment(const std::string& raw);
std::vector<std::string> segment(const std::string& raw,
                                 const std::vector<std::string>& delimiters);

// ---------------------------------------------------------------------------
// Embeddings

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Uniform dimension across the batch. Throws ProviderError on degenerate
  /// input (e.g. a text with no tokens).
  virtual std::vector<Vec> embed(const std::vector<std::string>& texts) = 0;
};

/// Deterministic feature-hashing encoder: each lowercased token lands in a
/// signed 384-dim accumulator, then L2 normalization. Same text, same vector,
/// on every platform.
class LocalHashEmbedder : public EmbeddingProvider {
 public:
  explicit LocalHashEmbedder(int dimension = 384) : dimension_(dimension) {}
  std::vector<Vec> embed(const std::vector<std::string>& texts) override;
  int dimension() const { return dimension_; }

 private:
  int dimension_;
};

/// Embedding-endpoint client ({"model", "input": [...]} -> {"data": [...]}).
class RemoteEmbedder : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string endpoint, std::string model);
  std::vector<Vec> embed(const std::vector<std::string>& texts) override;

 private:
  std::string endpoint_;
  std::string model_;
};

double cosine(const Vec& a, const Vec& b);

// ---------------------------------------------------------------------------
// Clustering

struct Cluster {
  int id = 0;
  std::vector<std::size_t> members;
  Vec centroid;  // mean of member vectors
};

struct ClusterModel {
  int k = 0;
  std::vector<Vec> centroids;
  std::vector<int> assignment;        // point index -> cluster id
  std::vector<double> sse_history;    // per Lloyd iteration, non-increasing
  double sse = 0;
};

std::vector<Cluster> clusters_of(const ClusterModel& model);

/// k-means++ seeding, Euclidean updates (cosine-compatible on unit-normalized
/// input), empty-cluster repair from the farthest point, 100-iteration cap.
ClusterModel kmeans(const std::vector<Vec>& vectors, int k, std::uint64_t seed);

struct ElbowResult {
  int k = 0;         // clamped to [3,5]
  int raw_k = 0;     // the curvature argmax before clamping
  bool clamped = false;
  std::string notice;
};

/// Within-cluster SSE per k; picks the k maximizing the discrete second
/// difference; flat curves tie-break to the smallest k.
ElbowResult select_k_elbow(const std::vector<Vec>& vectors, int k_lo, int k_hi);

/// Nearest centroid by cosine similarity; ties break to the lower cluster id.
int assign_cluster(const Vec& robot, const ClusterModel& model);

/// Mean cosine similarity between the robot response and every human unit in
/// the cluster (stored vectors as-is).
double avg_sim(const Vec& robot, const Cluster& cluster, const std::vector<Vec>& corpus);

/// |C| / n.
double proportion_rate(const Cluster& cluster, std::size_t total_units);

// ---------------------------------------------------------------------------
// Likert

struct LikertStats {
  double mean = 0;
  double sd = 0;       // sample standard deviation
  double percent = 0;  // mean/7 * 100, exact
};

LikertStats likert_stats(const std::vector<int>& samples);

/// Headline-style percentage with one decimal, truncated toward zero — the
/// only one-decimal convention under which the reference satisfaction means
/// and their percentages agree (6.42 -> 91.7, 6.15 -> 87.8, 6.17 -> 88.1).
double headline_percent(double mean);

// ---------------------------------------------------------------------------
// Ablation

struct AblationCell {
  double need_sim = 0;
  double sol_sim = 0;
};

struct AblationReport {
  std::map<PromptVariant, AblationCell> cells;
  double atom_removal_need_delta = 0;        // full - (w/o AToM, w/ constraints)
  double atom_removal_sol_delta = 0;
  double constraint_removal_need_delta = 0;  // full - (w/ AToM, w/o constraints)
  double constraint_removal_sol_delta = 0;

  std::string to_markdown() const;
};

AblationReport ablation_report(const std::map<PromptVariant, AblationCell>& cells);

// ---------------------------------------------------------------------------
// Corpus and per-task evaluation

struct ResponseRow {
  std::string participant_id;
  int task_id = 0;
  std::string stage;  // need | solution | execution
  std::string text;   // pre-translated; translation itself is out of scope
  int likert = 0;
  std::string lang = "en";  // source-language tag, from the optional lang column
};

/// Delimited file with header participant_id,task_id,stage,text,likert and
/// an optional lang column. Schema errors carry 1-based line numbers.
std::vector<ResponseRow> load_corpus_csv(const std::filesystem::path& file);
std::vector<ResponseRow> parse_corpus_csv(const std::string& content);

struct HumanResponseUnit {
  int task_id = 0;
  std::string stage;
  std::string text;
  Vec vector;
};

struct RobotResponse {
  int task_id = 0;
  std::string stage;
  std::string text;
  Vec vector;
};

enum class SimilarityMode {
  assigned_cluster,  // the cluster the robot response lands in
  modal_cluster,     // the most frequent human cluster
};

struct SimilarityReport {
  int task_id = 0;
  std::string stage;
  int k = 0;
  bool k_clamped = false;
  std::vector<Cluster> clusters;
  int assigned_cluster = 0;
  double avg_sim = 0;
  double proportion = 0;
  double likert_mean = 0;
  double likert_sd = 0;
};

SimilarityReport evaluate_task(const std::vector<HumanResponseUnit>& units,
                               const RobotResponse& robot, const std::vector<int>& likerts,
                               std::uint64_t seed,
                               SimilarityMode mode = SimilarityMode::assigned_cluster);

}  // namespace atom::eval
