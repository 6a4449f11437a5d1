#include "scga/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "scga/errors.hpp"

namespace scga {

using nlohmann::json;

void DialogueSample::validate() const {
  if (round < 1 || round > 10) {
    throw DataError("sample " + id + ": round " + std::to_string(round) + " outside [1, 10]");
  }
  if (static_cast<std::size_t>(round) != turns.size() + 1) {
    throw DataError("sample " + id + ": round " + std::to_string(round) +
                    " inconsistent with " + std::to_string(turns.size()) + " prior turns");
  }
  if (question.empty()) throw DataError("sample " + id + ": empty question");
  if (answer.empty() || answer.size() > 29) {
    throw DataError("sample " + id + ": answer length " + std::to_string(answer.size()) +
                    " outside [1, 29]");
  }
  if (referent < -1 || referent >= round) {
    throw DataError("sample " + id + ": referent " + std::to_string(referent) +
                    " outside history units");
  }
  video.validate();
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

WorldCatalog::WorldCatalog(std::size_t feat_dim, std::uint64_t seed) : feat_dim_(feat_dim) {
  struct Spec {
    const char *color, *noun;
  };
  static const Spec kEntities[] = {
      {"red", "dog"},    {"blue", "cat"},     {"green", "bird"},  {"yellow", "car"},
      {"black", "ball"}, {"white", "robot"},  {"orange", "boat"}, {"purple", "drone"},
      {"red", "cat"},    {"blue", "dog"},     {"green", "ball"},  {"yellow", "bird"},
  };
  verbs_ = {"spin", "roll", "jump", "slide", "bounce", "wave",
            "hop",  "drift", "shake", "glide", "flip",  "dash"};
  Rng rng(seed);
  for (const auto& e : kEntities) {
    Entity entity;
    entity.color = e.color;
    entity.noun = e.noun;
    entity.signature.resize(feat_dim_);
    for (auto& v : entity.signature) v = rng.uniform(-1.0, 1.0);
    entities_.push_back(std::move(entity));
  }
}

Vocabulary WorldCatalog::vocabulary() const {
  Vocabulary v;
  for (const char* w :
       {"the", "scene", "has", "a", "and", "what", "does", "do", "it", "or", "is", "there",
        "in", "video", "yes", "no", "tell", "me", "doing", "now", "here", "right", "some", "moving", "things",
        "that", "you", "can", "watch"}) {
    v.add(w);
  }
  for (const auto& e : entities_) {
    v.add(e.color);
    v.add(e.noun);
  }
  for (const auto& verb : verbs_) v.add(verb);
  return v;
}

// ---------------------------------------------------------------------------
// world generation
// ---------------------------------------------------------------------------

World generate_world(const WorldSpec& spec, const WorldCatalog& catalog, Rng& rng) {
  if (spec.per_frame < 2) {
    throw ConfigError("generate_world: need at least 2 entities per world");
  }
  if (spec.per_frame > catalog.size()) {
    throw ConfigError("generate_world: " + std::to_string(spec.per_frame) +
                      " entities requested but the catalog has " +
                      std::to_string(catalog.size()));
  }
  if (spec.frames == 0) throw ConfigError("generate_world: need at least one frame");

  // Draw distinct catalog entities.
  std::vector<int> pool(catalog.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
  rng.shuffle(pool);
  std::vector<int> chosen(pool.begin(), pool.begin() + static_cast<long>(spec.per_frame));

  struct Track {
    double cx, cy, w, h;
  };
  std::vector<Track> tracks;
  for (std::size_t e = 0; e < spec.per_frame; ++e) {
    Track t;
    t.w = rng.uniform(0.12, 0.2);
    t.h = rng.uniform(0.12, 0.2);
    t.cx = rng.uniform(t.w / 2, 1.0 - t.w / 2);
    t.cy = rng.uniform(t.h / 2, 1.0 - t.h / 2);
    tracks.push_back(t);
  }

  World world;
  world.video.frames = spec.frames;
  world.video.per_frame = spec.per_frame;
  world.video.feat_dim = spec.feat_dim;
  world.video.appearance.resize(spec.frames * spec.per_frame * spec.feat_dim);
  world.video.boxes.resize(spec.frames * spec.per_frame);
  world.video.labels.resize(spec.frames * spec.per_frame);
  world.entity_ids = chosen;

  std::vector<std::size_t> slots(spec.per_frame);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    // Shuffled slot order per frame: tracking must use labels and geometry.
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    rng.shuffle(slots);
    for (std::size_t e = 0; e < spec.per_frame; ++e) {
      auto& track = tracks[e];
      if (t > 0) {
        track.cx += rng.uniform(-spec.drift, spec.drift);
        track.cy += rng.uniform(-spec.drift, spec.drift);
        track.cx = std::clamp(track.cx, track.w / 2, 1.0 - track.w / 2);
        track.cy = std::clamp(track.cy, track.h / 2, 1.0 - track.h / 2);
      }
      const std::size_t node = t * spec.per_frame + slots[e];
      world.video.boxes[node] =
          Box{track.cx - track.w / 2, track.cy - track.h / 2, track.w, track.h};
      world.video.labels[node] = chosen[e];
      const auto& signature = catalog.entities()[static_cast<std::size_t>(chosen[e])].signature;
      if (signature.size() != spec.feat_dim) {
        throw ConfigError("generate_world: catalog feature dim " +
                          std::to_string(signature.size()) + " != spec feature dim " +
                          std::to_string(spec.feat_dim));
      }
      for (std::size_t f = 0; f < spec.feat_dim; ++f) {
        world.video.appearance[node * spec.feat_dim + f] =
            signature[f] + rng.uniform(-spec.appearance_noise, spec.appearance_noise);
      }
    }
  }
  world.video.validate();
  return world;
}

// ---------------------------------------------------------------------------
// dialogue generation
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_words(const std::string& text) { return tokenize(text); }

}  // namespace

std::vector<DialogueSample> generate_dialogue(const World& world, const WorldCatalog& catalog,
                                              std::size_t rounds, Rng& rng,
                                              const std::string& id_prefix) {
  if (world.entity_ids.size() < 2) {
    throw ConfigError("generate_dialogue: world needs at least 2 entities");
  }
  if (rounds < 1 || rounds > 10) {
    throw ConfigError("generate_dialogue: rounds must be in [1, 10]");
  }
  const auto& entities = catalog.entities();
  const auto& verbs = catalog.verbs();
  auto entity = [&](std::size_t world_slot) -> const WorldCatalog::Entity& {
    return entities[static_cast<std::size_t>(world.entity_ids[world_slot])];
  };

  // Template lengths are harmonized so no history unit is shorter than an
  // introduction unit (12 tokens): the mixed-history gradient reaches every
  // arm only up to the selected unit's length, and the binding verb sits on
  // an introduction unit's last row. The caption and the pronoun questions
  // are deliberately constant across worlds: under any fixed selection rule
  // that ignores content, pronoun samples from one world become identical
  // inputs with different target verbs, so only content-aware selection of
  // the binding turn can resolve them.
  const std::vector<std::string> caption =
      split_words("the scene now has some moving things that you can watch here");

  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> turns;
  std::vector<DialogueSample> samples;

  // The pronoun refers to the entity of the most recent introduction turn;
  // presence turns never re-bind it. Verbs are drawn fresh per introduction
  // and never reused within a dialogue, so exactly one history unit carries
  // the current binding.
  std::vector<std::string> unused_verbs = verbs;
  rng.shuffle(unused_verbs);
  int binding_unit = -1;          // history-unit index of the live introduction
  std::string binding_verb;
  bool binding_asked = true;      // one pronoun follow-up per introduction

  for (std::size_t r = 1; r <= rounds; ++r) {
    enum class Kind { kIntroduce, kPronoun, kPresence };
    Kind kind;
    if (r == 1) {
      kind = Kind::kIntroduce;
    } else if (!binding_asked) {
      const double roll = rng.uniform();
      kind = roll < 0.60 ? Kind::kPronoun : (roll < 0.75 ? Kind::kIntroduce : Kind::kPresence);
    } else {
      kind = rng.uniform() < 0.75 ? Kind::kIntroduce : Kind::kPresence;
    }
    if (kind == Kind::kIntroduce && unused_verbs.empty()) kind = Kind::kPresence;

    std::vector<std::string> question, answer;
    int referent = -1;
    bool emit = true;

    switch (kind) {
      case Kind::kIntroduce: {
        const std::size_t slot = rng.below(world.entity_ids.size());
        const auto& e = entity(slot);
        const std::string name = e.color + " " + e.noun;
        binding_verb = unused_verbs.back();
        unused_verbs.pop_back();
        binding_unit = static_cast<int>(r);  // becomes history unit r next round
        binding_asked = false;
        question = split_words(rng.uniform() < 0.5 ? "what does the " + name + " do now"
                                                   : "tell me what the " + name + " does");
        answer = split_words("the " + name + " does " + binding_verb);
        emit = false;  // fresh verb: not predictable, history context only
        break;
      }
      case Kind::kPronoun: {
        if (rng.uniform() < 0.4) {
          // Verb choice: both candidates sit in the question; the referent
          // unit decides which one is right.
          std::string distractor;
          do {
            distractor = verbs[rng.below(verbs.size())];
          } while (distractor == binding_verb);
          const bool correct_first = rng.uniform() < 0.5;
          const std::string& v1 = correct_first ? binding_verb : distractor;
          const std::string& v2 = correct_first ? distractor : binding_verb;
          question = split_words(rng.uniform() < 0.5
                                     ? "tell me does it do " + v1 + " or " + v2 + " now"
                                     : "is it doing " + v1 + " or " + v2 + " now tell me");
          answer = split_words("it does " + binding_verb);
        } else {
          // Open form: the verb is not in the question at all, so it stays
          // reachable only through the referent unit.
          question = split_words(rng.uniform() < 0.5 ? "tell me what does it do right now"
                                                     : "what is it doing right now tell me");
          answer = split_words("it does " + binding_verb + " now");
        }
        referent = binding_unit;
        binding_asked = true;
        break;
      }
      case Kind::kPresence: {
        const bool present = rng.uniform() < 0.5;
        std::size_t catalog_id;
        if (present) {
          catalog_id = static_cast<std::size_t>(
              world.entity_ids[rng.below(world.entity_ids.size())]);
        } else {
          // Rejection-sample an absent catalog entity.
          do {
            catalog_id = rng.below(catalog.size());
          } while (std::find(world.entity_ids.begin(), world.entity_ids.end(),
                             static_cast<int>(catalog_id)) != world.entity_ids.end());
        }
        const auto& e = entities[catalog_id];
        const std::string name = e.color + " " + e.noun;
        question = split_words("is there a " + name + " in the video");
        answer = split_words(present ? "yes there is a " + name : "no there is no " + name);
        break;
      }
    }

    if (emit) {
      DialogueSample sample;
      sample.id = id_prefix + "-r" + std::to_string(r);
      sample.video = world.video;
      sample.caption = caption;
      sample.turns = turns;
      sample.round = static_cast<int>(r);
      sample.question = question;
      sample.answer = answer;
      sample.referent = referent;
      samples.push_back(std::move(sample));
    }
    turns.emplace_back(std::move(question), std::move(answer));
  }
  return samples;
}

std::vector<DialogueSample> generate_dataset(const WorldSpec& spec, const WorldCatalog& catalog,
                                             std::uint64_t seed, std::size_t count,
                                             const std::string& id_prefix) {
  if (spec.min_rounds < 1 || spec.min_rounds > spec.max_rounds || spec.max_rounds > 10) {
    throw ConfigError("generate_dataset: rounds range [" + std::to_string(spec.min_rounds) +
                      ", " + std::to_string(spec.max_rounds) + "] invalid");
  }
  Rng rng(seed);
  std::vector<DialogueSample> samples;
  std::size_t world_index = 0;
  while (samples.size() < count) {
    World world = generate_world(spec, catalog, rng);
    const std::size_t rounds =
        spec.min_rounds + rng.below(spec.max_rounds - spec.min_rounds + 1);
    const std::string prefix = id_prefix + "-w" + std::to_string(world_index++);
    auto dialogue = generate_dialogue(world, catalog, rounds, rng, prefix);
    for (auto& s : dialogue) {
      if (samples.size() == count) break;
      samples.push_back(std::move(s));
    }
  }
  for (const auto& s : samples) s.validate();
  return samples;
}

// ---------------------------------------------------------------------------
// dataset I/O
// ---------------------------------------------------------------------------

namespace {

json video_to_json(const VideoObjects& v) {
  json boxes = json::array();
  for (const auto& b : v.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
  json appearance = json::array();
  for (std::size_t node = 0; node < v.node_count(); ++node) {
    json row = json::array();
    for (std::size_t f = 0; f < v.feat_dim; ++f) row.push_back(v.appearance[node * v.feat_dim + f]);
    appearance.push_back(std::move(row));
  }
  return json{{"frames", v.frames},
              {"per_frame", v.per_frame},
              {"feat_dim", v.feat_dim},
              {"labels", v.labels},
              {"boxes", std::move(boxes)},
              {"appearance", std::move(appearance)}};
}

const json& require_field(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw DataError(std::string("missing required field '") + field + "'");
  }
  return *it;
}

VideoObjects video_from_json(const json& j) {
  VideoObjects v;
  v.frames = require_field(j, "frames").get<std::size_t>();
  v.per_frame = require_field(j, "per_frame").get<std::size_t>();
  v.feat_dim = require_field(j, "feat_dim").get<std::size_t>();
  v.labels = require_field(j, "labels").get<std::vector<int>>();
  for (const auto& b : require_field(j, "boxes")) {
    v.boxes.push_back(Box{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                          b.at(3).get<double>()});
  }
  for (const auto& row : require_field(j, "appearance")) {
    for (const auto& x : row) v.appearance.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<DialogueSample>& samples) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open dataset for writing: " + path);
  for (const auto& s : samples) {
    json turns = json::array();
    for (const auto& [q, a] : s.turns) turns.push_back({q, a});
    const json record{{"id", s.id},
                      {"round", s.round},
                      {"caption", s.caption},
                      {"turns", std::move(turns)},
                      {"question", s.question},
                      {"answer", s.answer},
                      {"referent", s.referent},
                      {"video", video_to_json(s.video)}};
    os << record.dump() << '\n';
  }
  if (!os) throw DataError("short write on dataset: " + path);
}

std::vector<DialogueSample> read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset: " + path);
  std::vector<DialogueSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json record = json::parse(line);
      DialogueSample s;
      s.id = require_field(record, "id").get<std::string>();
      s.round = require_field(record, "round").get<int>();
      s.caption = require_field(record, "caption").get<std::vector<std::string>>();
      for (const auto& turn : require_field(record, "turns")) {
        s.turns.emplace_back(turn.at(0).get<std::vector<std::string>>(),
                             turn.at(1).get<std::vector<std::string>>());
      }
      s.question = require_field(record, "question").get<std::vector<std::string>>();
      s.answer = require_field(record, "answer").get<std::vector<std::string>>();
      s.referent = require_field(record, "referent").get<int>();
      s.video = video_from_json(require_field(record, "video"));
      s.validate();
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace scga
