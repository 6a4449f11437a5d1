#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scga/rng.hpp"
#include "scga/video.hpp"
#include "scga/vocab.hpp"

namespace scga {

// One training/eval unit: a video, the dialogue history before round r, the
// current question, and its target answer. `referent` records the planted
// history-unit index (0 = caption, i = turn i) that resolves the question's
// pronoun, or -1 for questions without one.
struct DialogueSample {
  std::string id;
  VideoObjects video;
  std::vector<std::string> caption;
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> turns;
  int round = 1;  // r = turns.size() + 1, in [1, 10]
  std::vector<std::string> question;
  std::vector<std::string> answer;
  int referent = -1;

  void validate() const;  // throws DataError on invariant violations
};

// Parameters of the synthetic dialogue world. Drift must stay below the
// temporal edge threshold so ground-truth temporal chains exist.
struct WorldSpec {
  std::size_t frames = 6;        // T
  std::size_t per_frame = 3;     // O, entities per world
  std::size_t feat_dim = 32;     // d_v
  double drift = 0.05;           // per-frame center drift bound (< tau_t)
  double appearance_noise = 0.02;
  std::size_t min_rounds = 2;
  std::size_t max_rounds = 6;    // <= 10
  std::uint64_t catalog_seed = 7;  // fixes entity signatures across datasets
};

// Fixed inventory of nameable entities and action verbs. Each entity has a
// unique (color, noun) name and a fixed appearance signature drawn once from
// the catalog seed, so entities are identifiable from their appearance
// vectors across every generated world. Verbs are bound to entities per
// dialogue, never globally: an entity's current action is only ever knowable
// from the turn that introduced it.
class WorldCatalog {
 public:
  struct Entity {
    std::string color, noun;
    std::vector<double> signature;  // length feat_dim
  };

  WorldCatalog(std::size_t feat_dim, std::uint64_t seed);

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<std::string>& verbs() const { return verbs_; }
  std::size_t size() const { return entities_.size(); }

  // Every token any generator template can emit, in deterministic order.
  Vocabulary vocabulary() const;

 private:
  std::vector<Entity> entities_;
  std::vector<std::string> verbs_;
  std::size_t feat_dim_;
};

// A generated world: the video plus which catalog entities appear in it.
struct World {
  VideoObjects video;
  std::vector<int> entity_ids;  // catalog indices, one per object slot
};

// Entities move on smooth trajectories (per-frame drift <= spec.drift) with
// stable labels; object order within each frame is shuffled so temporal
// matching has to rely on labels and geometry, not slot position.
World generate_world(const WorldSpec& spec, const WorldCatalog& catalog, Rng& rng);

// Full dialogue over one world. Introduction turns bind a fresh verb to an
// entity by name ("the red dog does spin"); pronoun turns ask about the
// latest binding ("does it do spin or roll") and are answerable only through
// the turn that planted it; presence turns ground in the video. Samples are
// emitted for pronoun and presence rounds (introduction answers carry fresh
// randomness and are not predictable), so every emitted answer is derivable
// from (history unit, question, video).
std::vector<DialogueSample> generate_dialogue(const World& world, const WorldCatalog& catalog,
                                              std::size_t rounds, Rng& rng,
                                              const std::string& id_prefix);

// Generates dialogues until `count` samples exist, then truncates.
std::vector<DialogueSample> generate_dataset(const WorldSpec& spec, const WorldCatalog& catalog,
                                             std::uint64_t seed, std::size_t count,
                                             const std::string& id_prefix);

// ---- dataset files (.scga.jsonl) -------------------------------------------
// One self-describing JSON record per line; floats round-trip bit-exactly.

void write_dataset(const std::string& path, const std::vector<DialogueSample>& samples);
std::vector<DialogueSample> read_dataset(const std::string& path);

}  // namespace scga
