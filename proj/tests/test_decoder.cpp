#include <cmath>

#include "doctest.h"
#include "scga/data.hpp"
#include "scga/decoder.hpp"
#include "scga/errors.hpp"
#include "scga/model.hpp"

using namespace scga;

namespace {

ModelConfig tiny_config() {
  ModelConfig mc;
  mc.d = 16;
  mc.d_v = 8;
  mc.heads = 4;
  mc.distances = {1, 2};
  mc.heads_per_distance = {2, 2};
  mc.max_positions = 40;
  return mc;
}

WorldSpec tiny_world() {
  WorldSpec ws;
  ws.frames = 3;
  ws.per_frame = 2;
  ws.feat_dim = 8;
  ws.min_rounds = 4;
  ws.max_rounds = 6;
  return ws;
}

DialogueSample sample_with_referent(const std::vector<DialogueSample>& samples) {
  for (const auto& s : samples)
    if (s.referent >= 0) return s;
  return samples.front();
}

}  // namespace

TEST_CASE("decoder_forward: single-step self-attention is the singleton softmax") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  ScgaModel model(tiny_config(), catalog.vocabulary(), 5);
  auto samples = generate_dataset(ws, catalog, 3, 4, "s");
  DialogueSample s = samples.front();
  s.answer = {"yes"};

  ScgaModel::Encoded enc;
  DecoderTrace trace;
  model.teacher_forced_loss(s, ForwardMode::eval(), nullptr, &enc, &trace);
  // prefix = <bos> + 1 answer token -> causal row 0 attends only itself
  for (const auto& alpha : trace.self_alphas) {
    CHECK(alpha.at(0, 0) == 1.0);
    CHECK(alpha.at(0, 1) == 0.0);
    CHECK(alpha.at(1, 0) + alpha.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("causality: suffix perturbation leaves earlier steps bitwise unchanged") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  const Vocabulary vocab = catalog.vocabulary();
  Rng seeds(99);
  for (int trial = 0; trial < 20; ++trial) {
    ScgaModel model(tiny_config(), vocab, seeds.next_u64());
    auto samples = generate_dataset(ws, catalog, seeds.next_u64(), 1, "s");
    const DialogueSample& s = samples.front();
    auto enc = model.encode(s, ForwardMode::eval());

    std::vector<int> ids{Vocabulary::kBos};
    const std::size_t len = 2 + seeds.below(6);
    for (std::size_t i = 0; i < len; ++i) {
      ids.push_back(4 + static_cast<int>(seeds.below(
                            static_cast<std::uint64_t>(vocab.size() - 4))));
    }
    // perturb every position strictly after j
    const std::size_t j = 1 + seeds.below(len - 1);
    std::vector<int> perturbed = ids;
    for (std::size_t k = j + 1; k < perturbed.size(); ++k) {
      perturbed[k] = 4 + (perturbed[k] + 1 - 4) % (vocab.size() - 4);
    }
    REQUIRE(perturbed != ids);

    Tensor pa = model.prefix_step_scores(enc, ids);
    Tensor pb = model.prefix_step_scores(enc, perturbed);
    const std::size_t cols = pa.cols();
    for (std::size_t row = 0; row <= j; ++row) {
      for (std::size_t c = 0; c < cols; ++c) {
        CHECK(pa.at(row, c) == pb.at(row, c));  // bitwise
      }
    }
  }
}

TEST_CASE("all four attention stages are live: staged perturbation") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  const Vocabulary vocab = catalog.vocabulary();
  ScgaModel model(tiny_config(), vocab, 23);
  auto samples = generate_dataset(ws, catalog, 29, 1, "s");
  DialogueSample s = samples.front();

  auto enc = model.encode(s, ForwardMode::eval());
  std::vector<int> prefix{Vocabulary::kBos, 5, 6};

  DecoderTrace base;
  model.prefix_step_scores(enc, prefix, &base);

  // zero the video: z_q must be bitwise unchanged, z_v must differ
  DialogueSample zeroed = s;
  std::fill(zeroed.video.appearance.begin(), zeroed.video.appearance.end(), 0.0);
  auto enc_zero = model.encode(zeroed, ForwardMode::eval());
  DecoderTrace traced;
  model.prefix_step_scores(enc_zero, prefix, &traced);

  REQUIRE(base.z_ques.size() == traced.z_ques.size());
  for (std::size_t i = 0; i < base.z_ques.size(); ++i) {
    CHECK(base.z_ques.data()[i] == traced.z_ques.data()[i]);
  }
  bool vid_differs = false;
  for (std::size_t i = 0; i < base.z_vid.size(); ++i) {
    vid_differs = vid_differs || base.z_vid.data()[i] != traced.z_vid.data()[i];
  }
  CHECK(vid_differs);
}

TEST_CASE("step_scores: concatenated length and pointer zeroing") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  const Vocabulary vocab = catalog.vocabulary();
  ScgaModel model(tiny_config(), vocab, 3);
  auto samples = generate_dataset(ws, catalog, 7, 2, "s");
  const DialogueSample& s = samples.front();

  ScgaModel::Encoded enc;
  model.teacher_forced_loss(s, ForwardMode::eval(), nullptr, &enc);
  CHECK(enc.question_ids.size() == s.question.size());

  // p length = |V| + N_q comes from the public decode trace
  auto decoded = model.greedy_decode(s);
  for (const auto& step : decoded.steps) {
    CHECK(step.slot < static_cast<std::size_t>(vocab.size()) + s.question.size());
    if (step.from_pointer) {
      const std::size_t qpos = step.slot - static_cast<std::size_t>(vocab.size());
      CHECK(step.token_id == enc.question_ids[qpos]);
    }
  }
}

TEST_CASE("multi-hot targets count vocabulary plus question occurrences") {
  Vocabulary vocab;
  const int red = vocab.add("red");
  vocab.add("dog");
  const std::vector<std::string> question{"is", "red", "or", "red", "here"};
  // "red" appears twice in the question -> 3 hot slots
  auto y = multi_hot_target("red", question, vocab);
  REQUIRE(y.size() == static_cast<std::size_t>(vocab.size()) + question.size());
  double hot = 0;
  for (double v : y) hot += v;
  CHECK(hot == 3.0);
  CHECK(y[static_cast<std::size_t>(red)] == 1.0);
  CHECK(y[static_cast<std::size_t>(vocab.size()) + 1] == 1.0);
  CHECK(y[static_cast<std::size_t>(vocab.size()) + 3] == 1.0);

  // absent from the question -> exactly one hot slot
  auto y2 = multi_hot_target("dog", question, vocab);
  hot = 0;
  for (double v : y2) hot += v;
  CHECK(hot == 1.0);

  // OOV target maps to <unk> in the vocab segment
  auto y3 = multi_hot_target("zebra", question, vocab);
  CHECK(y3[Vocabulary::kUnk] == 1.0);

  // loss is non-negative and vanishes as sigmoid(p) -> y
  Tensor close = Tensor::constant({1, y.size()}, [&] {
    std::vector<double> v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i] > 0.5 ? 40.0 : -40.0;
    return v;
  }());
  CHECK(step_loss(close, y).scalar_value() >= 0.0);
  CHECK(step_loss(close, y).scalar_value() < 1e-9);
}

TEST_CASE("greedy decode: halts on <eos>, never exceeds the length cap") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  const Vocabulary vocab = catalog.vocabulary();
  Rng seeds(17);
  for (int trial = 0; trial < 5; ++trial) {
    ScgaModel model(tiny_config(), vocab, seeds.next_u64());
    auto samples = generate_dataset(ws, catalog, seeds.next_u64(), 2, "s");
    auto out = model.greedy_decode(samples.front());
    CHECK(out.token_ids.size() <= model.config().max_decode_len);
    for (int id : out.token_ids) CHECK(id != Vocabulary::kEos);
  }
}

TEST_CASE("beam(1) equals greedy on 50 random-parameter models") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  const Vocabulary vocab = catalog.vocabulary();
  Rng seeds(4242);
  for (int trial = 0; trial < 50; ++trial) {
    ScgaModel model(tiny_config(), vocab, seeds.next_u64());
    auto samples = generate_dataset(ws, catalog, seeds.next_u64(), 1, "s");
    const auto greedy = model.greedy_decode(samples.front());
    const auto beam1 = model.beam_decode(samples.front(), 1, 1.0);
    CHECK(greedy.token_ids == beam1.token_ids);
    CHECK(greedy.score == doctest::Approx(beam1.score).epsilon(1e-12));
  }
}

TEST_CASE("beam rejects beam < 1 and length penalty favors longer ties") {
  WorldSpec ws = tiny_world();
  WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  ScgaModel model(tiny_config(), catalog.vocabulary(), 3);
  auto samples = generate_dataset(ws, catalog, 7, 1, "s");
  CHECK_THROWS_AS(model.beam_decode(samples.front(), 0, 1.0), ConfigError);

  // hand-constructed score table: hypothesis A = one step with log-sig la,
  // hypothesis B = two steps with log-sigs lb1+lb2. With penalty p the
  // normalized scores are la/1 and (lb1+lb2)/2^p: for la = -1.0,
  // lb = -0.9 each: p=1 -> A: -1.0, B: -0.9 -> B wins; p=0 -> A: -1.0,
  // B: -1.8 -> A wins. Checked arithmetically:
  const double la = -1.0, lb = -0.9;
  auto norm = [](double total, std::size_t len, double p) {
    return total / std::pow(static_cast<double>(len), p);
  };
  CHECK(norm(la, 1, 0.0) > norm(2 * lb, 2, 0.0));
  CHECK(norm(la, 1, 1.0) < norm(2 * lb, 2, 1.0));
}
