#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgintent {

enum class ModelKind : std::uint8_t { kTransE, kTransH, kTransR, kRotatE, kDistMult, kComplEx };

std::string_view model_name(ModelKind m);
std::optional<ModelKind> parse_model(std::string_view name);
const std::vector<ModelKind>& all_models();

struct ModelConfig {
  ModelKind model = ModelKind::kTransE;
  std::size_t dim = 50;
  double lr = 0.01;
  std::size_t npp = 1;
  double margin = 1.0;
  int norm = 2;  // TransE only
  std::size_t batch_size = 128;
  std::size_t max_epochs = 300;
  std::uint64_t seed = 42;

  void check() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct EarlyStopConfig {
  bool enabled = true;
  std::size_t frequency = 15;  // epochs between validation runs
  std::size_t patience = 2;    // consecutive non-improving validations tolerated
};

// An (head, relation, tail) triple over integer ids.
struct Fact {
  std::uint32_t head = 0;
  std::uint32_t rel = 0;
  std::uint32_t tail = 0;
  friend bool operator==(const Fact&, const Fact&) = default;
  friend auto operator<=>(const Fact&, const Fact&) = default;
};

// Bidirectional name <-> id table.
class Vocab {
 public:
  std::uint32_t add(const std::string& name);
  std::optional<std::uint32_t> find(const std::string& name) const;
  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

class UnembeddedError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, double lr);
  std::size_t epoch() const { return epoch_; }
  double lr() const { return lr_; }

 private:
  std::size_t epoch_;
  double lr_;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  void resize_rows(std::size_t n) {
    rows = n;
    data.resize(n * cols, 0.0);
  }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class Block : std::uint8_t { kEntity, kRelation, kExtra };

// Parameters of a trained model. Entity rows hold real coordinates, or
// [real | imaginary] halves for RotatE and ComplEx. Relation rows hold the
// translation (TransE/H/R), phases (RotatE) or diagonal (DistMult/ComplEx).
// Extra rows hold TransH hyperplane normals or TransR projection matrices.
struct EmbeddingState {
  ModelConfig config;
  Vocab entities;
  Vocab relations;
  Matrix entity;
  Matrix relation;
  Matrix extra;

  Matrix& block(Block b) { return b == Block::kEntity ? entity : b == Block::kRelation ? relation : extra; }
  const Matrix& block(Block b) const {
    return b == Block::kEntity ? entity : b == Block::kRelation ? relation : extra;
  }
  std::size_t entity_width() const { return entity.cols; }

  std::optional<Fact> resolve(const std::string& h, const std::string& r, const std::string& t) const;

  friend bool operator==(const EmbeddingState& a, const EmbeddingState& b) {
    return a.config == b.config && a.entities.names() == b.entities.names() &&
           a.relations.names() == b.relations.names() && a.entity == b.entity &&
           a.relation == b.relation && a.extra == b.extra;
  }
};

// Creates a randomly initialised state for the given vocabularies.
EmbeddingState init_state(const ModelConfig& cfg, const Vocab& entities, const Vocab& relations);

// Adds rows for a new entity (or relation) initialised like a fresh one.
std::uint32_t add_entity(EmbeddingState& s, const std::string& name, std::mt19937_64& rng);
std::uint32_t add_relation(EmbeddingState& s, const std::string& name, std::mt19937_64& rng);

// Higher is more plausible.
double score(const EmbeddingState& s, const Fact& f);
// Name-level scoring; throws UnembeddedError for unknown names.
double score(const EmbeddingState& s, const std::string& h, const std::string& r, const std::string& t);

// Sparse accumulator with the same shape as an EmbeddingState.
class Gradient {
 public:
  explicit Gradient(const EmbeddingState& s);
  double* row(Block b, std::uint32_t i);
  const std::vector<std::uint32_t>& touched(Block b) const { return touched_[static_cast<int>(b)]; }
  const Matrix& block(Block b) const { return blocks_[static_cast<int>(b)]; }
  void clear();
  void grow(const EmbeddingState& s);

 private:
  Matrix blocks_[3];
  std::vector<char> marked_[3];
  std::vector<std::uint32_t> touched_[3];
};

// Adds coef * d score(f) / d params into g.
void accumulate_score_gradient(const EmbeddingState& s, const Fact& f, double coef, Gradient& g);

// Margin ranking loss: sum over negatives of max(0, m - score(pos) + score(neg)).
double mrl_loss(const EmbeddingState& s, const Fact& pos, const std::vector<Fact>& negs);
double mrl_loss(double pos_score, const std::vector<double>& neg_scores, double margin);
// Loss plus its gradient accumulated into g.
double mrl_loss_and_gradient(const EmbeddingState& s, const Fact& pos, const std::vector<Fact>& negs,
                             Gradient& g);

// Re-imposes entity norm bounds, unit TransH normals.
void project_constraints(EmbeddingState& s);
void project_rows(EmbeddingState& s, const std::vector<std::uint32_t>& entity_rows,
                  const std::vector<std::uint32_t>& extra_rows);
// True when all state invariants hold (within tol).
bool constraints_hold(const EmbeddingState& s, double tol = 1e-9);

enum class Side : std::uint8_t { kHead, kTail };

struct NegativeSample {
  Fact original;
  Fact corrupted;
  Side corrupted_slot = Side::kTail;
};

// Bernoulli corruption: relation-specific head-corruption probability
// tph / (tph + hpt), uniform replacement entity, resampled on collision with a
// known triple up to max_retries times.
class BernoulliSampler {
 public:
  BernoulliSampler(const std::vector<Fact>& train, std::size_t n_entities, std::size_t max_retries = 100);
  double head_probability(std::uint32_t rel) const;
  std::vector<NegativeSample> sample(const Fact& t, std::size_t npp, std::mt19937_64& rng) const;
  bool known(const Fact& f) const { return known_.count(key(f)) != 0; }

 private:
  static std::uint64_t key(const Fact& f) {
    return (static_cast<std::uint64_t>(f.head) << 40) | (static_cast<std::uint64_t>(f.rel) << 24) | f.tail;
  }
  std::size_t n_entities_;
  std::size_t max_retries_;
  std::vector<double> head_prob_;
  std::unordered_set<std::uint64_t> known_;
};

struct TrainHistory {
  std::vector<double> epoch_loss;                           // index = epoch - 1
  std::vector<std::pair<std::size_t, double>> valid_hits3;  // (epoch, value)
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool early_stopped = false;

  std::string to_csv() const;
};

// Scores every candidate for one open slot of (h, r, ?) or (?, r, t). Scores
// are bit-identical to score(); TransR projections are cached per relation, so
// callers should group queries by relation.
class CandidateScorer {
 public:
  explicit CandidateScorer(const EmbeddingState& s) : s_(s) {}
  // cands == nullptr scores every entity.
  void score(Side open, std::uint32_t known, std::uint32_t rel, const std::vector<std::uint32_t>* cands,
             std::vector<double>& out);

 private:
  const double* projected(std::uint32_t rel, std::uint32_t e);
  const EmbeddingState& s_;
  std::uint32_t cached_rel_ = UINT32_MAX;
  std::vector<double> proj_;
};

// Tie-aware rank: strictly better candidates plus half of the tied ones
// (the target included) plus one half.
double realistic_rank(const std::vector<double>& scores, std::size_t target);

// Validation tail Hits@3 over all embedded entities (raw ranking).
double tail_hits3(const EmbeddingState& s, const std::vector<Fact>& valid);

struct TrainOptions {
  EarlyStopConfig stop;
  // Replaces the default validation metric (tail Hits@3 on the validation facts).
  std::function<double(const EmbeddingState&)> validator;
  std::function<void(std::size_t epoch, double loss)> on_epoch;
};

// Trains a fresh state on `train` with validation-based early stopping.
// Returns the best-validation state (the final one when validation is empty).
std::pair<EmbeddingState, TrainHistory> train(const Vocab& entities, const Vocab& relations,
                                              const std::vector<Fact>& train_facts,
                                              const std::vector<Fact>& valid_facts,
                                              const ModelConfig& cfg, const TrainOptions& opts = {});

// Runs SGD epochs over `facts` on an existing state. Returns per-epoch loss.
std::vector<double> run_epochs(EmbeddingState& s, const std::vector<Fact>& facts,
                               const BernoulliSampler& sampler, std::size_t epochs,
                               std::mt19937_64& rng, std::size_t first_epoch = 1,
                               bool project_all_after_epoch = true);

struct FineTuneOptions {
  std::size_t epochs = 20;
  std::size_t rehearsal_ratio = 4;  // old triples sampled per new triple
  std::uint64_t seed = 7;
  // Optional initial vectors for unseen entities, by name.
  std::unordered_map<std::string, std::vector<double>> init;
};

// Named triple, for fine-tuning with entities the state has not seen.
struct NamedFact {
  std::string head, rel, tail;
};

// Embeds unseen entities of `new_facts` (neighbour-mean initialisation unless
// given explicitly) and trains on the new facts plus a uniform rehearsal
// sample of `old_facts`. Returns the ids of the new facts.
std::vector<Fact> fine_tune(EmbeddingState& s, const std::vector<Fact>& old_facts,
                            const std::vector<NamedFact>& new_facts, const FineTuneOptions& opts = {});

// Checkpoint: a text header (magic, config JSON, metadata JSON, name tables as
// JSON strings, block shapes) followed by the entity, relation and extra
// blocks as little-endian IEEE-754 doubles in row-major order.
void save_checkpoint(const EmbeddingState& s, const std::filesystem::path& path,
                     const std::string& metadata_json = "{}");
EmbeddingState load_checkpoint(const std::filesystem::path& path, std::string* metadata_json = nullptr);

}  // namespace kgintent
