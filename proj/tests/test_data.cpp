#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "scga/data.hpp"
#include "scga/errors.hpp"
#include "scga/stgraph.hpp"

using namespace scga;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("world generation: shapes, determinism, temporal chains") {
  WorldSpec spec;
  WorldCatalog catalog(spec.feat_dim, spec.catalog_seed);

  Rng rng(42);
  World w = generate_world(spec, catalog, rng);
  CHECK(w.video.node_count() == spec.frames * spec.per_frame);
  CHECK(w.video.boxes.size() == spec.frames * spec.per_frame);
  CHECK(w.entity_ids.size() == spec.per_frame);

  // same seed -> identical world
  Rng rng2(42);
  World w2 = generate_world(spec, catalog, rng2);
  CHECK(w.video.appearance == w2.video.appearance);
  CHECK(w.video.labels == w2.video.labels);

  // zero drift: every same-entity pair across adjacent frames is linked
  WorldSpec frozen = spec;
  frozen.drift = 0.0;
  Rng rng3(7);
  World wf = generate_world(frozen, catalog, rng3);
  BoolMat est = build_video_graph(wf.video, 0.4, 0.2);
  for (std::size_t t = 0; t + 1 < frozen.frames; ++t) {
    for (std::size_t i = 0; i < frozen.per_frame; ++i) {
      for (std::size_t j = 0; j < frozen.per_frame; ++j) {
        const std::size_t a = t * frozen.per_frame + i;
        const std::size_t b = (t + 1) * frozen.per_frame + j;
        if (wf.video.labels[a] == wf.video.labels[b]) CHECK(est.get(a, b) == 1);
      }
    }
  }

  // infeasible spec: more entities than the catalog
  WorldSpec too_big = spec;
  too_big.per_frame = catalog.size() + 1;
  Rng rng4(1);
  CHECK_THROWS_AS(generate_world(too_big, catalog, rng4), ConfigError);
}

TEST_CASE("dialogue generation: referents recorded, pronouns frequent, copies exist") {
  WorldSpec spec;
  WorldCatalog catalog(spec.feat_dim, spec.catalog_seed);
  auto samples = generate_dataset(spec, catalog, 11, 300, "t");
  REQUIRE(samples.size() == 300);

  std::size_t pronouns = 0;
  for (const auto& s : samples) {
    s.validate();
    const bool has_pronoun =
        std::find(s.question.begin(), s.question.end(), "it") != s.question.end();
    if (has_pronoun) {
      ++pronouns;
      // every pronoun question has a recorded ground-truth referent
      CHECK(s.referent >= 1);
      CHECK(s.referent < s.round);
      // the referent unit is an introduction turn carrying the answer verb
      const auto& turn = s.turns[static_cast<std::size_t>(s.referent - 1)];
      const std::string& verb = s.answer[2];  // "it does <verb> ..."
      CHECK(std::find(turn.second.begin(), turn.second.end(), verb) != turn.second.end());
    }
    // answers copy at least one token verbatim from the question
    bool copied = false;
    for (const auto& t : s.answer) {
      copied = copied || std::find(s.question.begin(), s.question.end(), t) != s.question.end();
    }
    CHECK(copied);
  }
  CHECK(static_cast<double>(pronouns) / static_cast<double>(samples.size()) >= 0.60);
}

TEST_CASE("generator determinism: identical bytes for identical seeds") {
  namespace fs = std::filesystem;
  WorldSpec spec;
  WorldCatalog catalog(spec.feat_dim, spec.catalog_seed);
  const std::string a = (fs::temp_directory_path() / "scga_data_a.scga.jsonl").string();
  const std::string b = (fs::temp_directory_path() / "scga_data_b.scga.jsonl").string();
  write_dataset(a, generate_dataset(spec, catalog, 5, 40, "d"));
  write_dataset(b, generate_dataset(spec, catalog, 5, 40, "d"));
  CHECK(slurp(a) == slurp(b));
  write_dataset(b, generate_dataset(spec, catalog, 6, 40, "d"));
  CHECK(slurp(a) != slurp(b));
  fs::remove(a);
  fs::remove(b);
}

TEST_CASE("dataset round trip is lossless") {
  namespace fs = std::filesystem;
  WorldSpec spec;
  WorldCatalog catalog(spec.feat_dim, spec.catalog_seed);
  auto samples = generate_dataset(spec, catalog, 3, 100, "rt");
  const std::string path = (fs::temp_directory_path() / "scga_rt.scga.jsonl").string();
  write_dataset(path, samples);
  auto loaded = read_dataset(path);
  REQUIRE(loaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].id == samples[i].id);
    CHECK(loaded[i].round == samples[i].round);
    CHECK(loaded[i].referent == samples[i].referent);
    CHECK(loaded[i].caption == samples[i].caption);
    CHECK(loaded[i].turns == samples[i].turns);
    CHECK(loaded[i].question == samples[i].question);
    CHECK(loaded[i].answer == samples[i].answer);
    // floats read back bit-equal
    CHECK(loaded[i].video.appearance == samples[i].video.appearance);
    CHECK(loaded[i].video.labels == samples[i].video.labels);
    for (std::size_t k = 0; k < samples[i].video.boxes.size(); ++k) {
      CHECK(loaded[i].video.boxes[k].x == samples[i].video.boxes[k].x);
      CHECK(loaded[i].video.boxes[k].w == samples[i].video.boxes[k].w);
    }
  }
  // write-read-write produces identical bytes
  const std::string path2 = (fs::temp_directory_path() / "scga_rt2.scga.jsonl").string();
  write_dataset(path2, loaded);
  CHECK(slurp(path) == slurp(path2));
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("dataset reader reports malformed records with line numbers") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "scga_bad.scga.jsonl").string();
  {
    std::ofstream os(path);
    os << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("line 1"), DataError);

  {
    WorldSpec spec;
    WorldCatalog catalog(spec.feat_dim, spec.catalog_seed);
    auto samples = generate_dataset(spec, catalog, 3, 1, "x");
    write_dataset(path, samples);
    std::string text = slurp(path);
    const auto pos = text.find("\"question\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "\"questionX\"");
    std::ofstream os(path, std::ios::trunc);
    os << text;
  }
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("question"), DataError);
  fs::remove(path);
}
