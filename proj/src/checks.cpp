#include "scga/checks.hpp"

#include <algorithm>
#include <cmath>

#include "scga/data.hpp"
#include "scga/gradcheck.hpp"
#include "scga/model.hpp"
#include "scga/rng.hpp"
#include "scga/tensor.hpp"

namespace scga {

namespace {

// Random values in [-1, 1] kept away from zero so kinked activations
// (leaky_relu, relu, |x| in the BCE form) are never probed at the kink.
Tensor random_leaf(Shape shape, Rng& rng, double kink_clearance = 0.0) {
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) {
    v = rng.uniform(-1.0, 1.0);
    if (kink_clearance > 0.0 && std::abs(v) < kink_clearance) {
      v = v >= 0.0 ? v + kink_clearance : v - kink_clearance;
    }
  }
  return Tensor::leaf(std::move(shape), std::move(data));
}

Tensor random_const(Shape shape, Rng& rng) {
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) v = rng.uniform(-1.0, 1.0);
  return Tensor::constant(std::move(shape), std::move(data));
}

// Loss wrapper: mean(out * C) with random constant C makes the upstream
// gradient non-uniform, which catches transposed-index bugs.
Tensor weighted_mean(const Tensor& out, const Tensor& weights) {
  return mean_all(mul(out, weights));
}

}  // namespace

std::vector<OpCheck> op_gradient_checks(std::uint64_t seed) {
  std::vector<OpCheck> results;
  auto run = [&results](const std::string& name, const std::function<Tensor()>& fwd,
                        const std::vector<Tensor>& leaves) {
    const GradCheckReport r = gradcheck(fwd, leaves);
    results.push_back({name, r.max_rel_err, r.coords_checked});
  };

  Rng rng(seed);

  {
    Tensor a = random_leaf({3, 4}, rng);
    Tensor b = random_leaf({4, 2}, rng);
    Tensor c = random_const({3, 2}, rng);
    run("matmul", [&] { return weighted_mean(matmul(a, b), c); }, {a, b});
  }
  {
    Tensor x = random_leaf({3, 5}, rng);
    Tensor c = random_const({5, 3}, rng);
    run("transpose", [&] { return weighted_mean(transpose(x), c); }, {x});
  }
  {
    Tensor a = random_leaf({4, 3}, rng);
    Tensor b = random_leaf({4, 3}, rng);
    Tensor c = random_const({4, 3}, rng);
    run("add", [&] { return weighted_mean(add(a, b), c); }, {a, b});
    run("sub", [&] { return weighted_mean(sub(a, b), c); }, {a, b});
    run("mul", [&] { return weighted_mean(mul(a, b), c); }, {a, b});
  }
  {
    Tensor x = random_leaf({4, 6}, rng);
    Tensor b = random_leaf({6}, rng);
    Tensor c = random_const({4, 6}, rng);
    run("add_rowvec", [&] { return weighted_mean(add_rowvec(x, b), c); }, {x, b});
  }
  {
    Tensor x = random_leaf({3, 3}, rng);
    Tensor s = random_leaf({1, 1}, rng);
    Tensor c = random_const({3, 3}, rng);
    run("scale_by", [&] { return weighted_mean(scale_by(x, s), c); }, {x, s});
  }
  {
    Tensor x = random_leaf({4, 5}, rng, 1e-2);
    Tensor c = random_const({4, 5}, rng);
    run("leaky_relu", [&] { return weighted_mean(leaky_relu(x), c); }, {x});
    run("relu", [&] { return weighted_mean(relu(x), c); }, {x});
  }
  {
    Tensor x = random_leaf({4, 5}, rng);
    Tensor c = random_const({4, 5}, rng);
    run("softmax_rows", [&] { return weighted_mean(softmax(x, 1), c); }, {x});
    run("softmax_cols", [&] { return weighted_mean(softmax(x, 0), c); }, {x});
  }
  {
    const std::size_t n = 5;
    Tensor x = random_leaf({n, n}, rng);
    Tensor c = random_const({n, n}, rng);
    std::vector<std::uint8_t> mask(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) mask[i * n + j] = (i == j || rng.uniform() < 0.5) ? 1 : 0;
    run("masked_softmax", [&] { return weighted_mean(masked_softmax(x, mask), c); }, {x});
  }
  {
    Tensor x = random_leaf({4, 8}, rng);
    Tensor g = random_leaf({8}, rng);
    Tensor b = random_leaf({8}, rng);
    Tensor c = random_const({4, 8}, rng);
    run("layer_norm", [&] { return weighted_mean(layer_norm(x, g, b), c); }, {x, g, b});
  }
  {
    Tensor a = random_leaf({2, 4}, rng);
    Tensor b = random_leaf({3, 4}, rng);
    Tensor c = random_const({5, 4}, rng);
    run("concat_rows", [&] { return weighted_mean(concat({a, b}, 0), c); }, {a, b});
    Tensor c2 = random_const({2, 7}, rng);
    Tensor b2 = random_leaf({2, 3}, rng);
    run("concat_cols", [&] { return weighted_mean(concat({a, b2}, 1), c2); }, {a, b2});
  }
  {
    Tensor x = random_leaf({5, 4}, rng);
    Tensor c = random_const({2, 4}, rng);
    run("slice_rows", [&] { return weighted_mean(slice(x, 0, 1, 3), c); }, {x});
    Tensor c2 = random_const({5, 2}, rng);
    run("slice_cols", [&] { return weighted_mean(slice(x, 1, 1, 3), c2); }, {x});
  }
  {
    Tensor x = random_leaf({4, 3}, rng);
    run("sum_all", [&] { return sum_all(x); }, {x});
    Tensor c = random_const({1, 3}, rng);
    run("mean_axis0", [&] { return weighted_mean(mean_axis0(x), c); }, {x});
  }
  {
    Tensor u = random_leaf({4, 1}, rng);
    Tensor v = random_leaf({3, 1}, rng);
    Tensor c = random_const({4, 3}, rng);
    run("pairwise_sum", [&] { return weighted_mean(pairwise_sum(u, v), c); }, {u, v});
  }
  {
    Tensor table = random_leaf({6, 4}, rng);
    const std::vector<int> ids{0, 3, 3, 5, 1};
    Tensor c = random_const({5, 4}, rng);
    run("embedding_rows", [&] { return weighted_mean(embedding_rows(table, ids), c); }, {table});
  }
  {
    Tensor x = random_leaf({4, 4}, rng);
    Tensor c = random_const({4, 4}, rng);
    const std::uint64_t mask_seed = rng.next_u64();
    run("dropout",
        [&, mask_seed] {
          Rng mask_rng(mask_seed);  // identical mask on every probe
          return weighted_mean(dropout(x, 0.3, mask_rng, true), c);
        },
        {x});
  }
  {
    Tensor x = random_leaf({1, 8}, rng, 1e-2);
    std::vector<double> targets(8);
    for (auto& t : targets) t = rng.uniform() < 0.3 ? 1.0 : 0.0;
    run("bce_with_logits", [&] { return bce_with_logits_mean(x, targets); }, {x});
  }

  return results;
}

OpCheck end_to_end_gradient_check(std::uint64_t seed) {
  // Tiny configuration keeps the coordinate sweep fast while touching every
  // parameter tensor of every module.
  ModelConfig mc;
  mc.d = 16;
  mc.d_v = 8;
  mc.heads = 4;
  mc.distances = {1, 2, 3};
  mc.heads_per_distance = {1, 1, 2};
  mc.max_positions = 32;

  WorldSpec ws;
  ws.frames = 3;
  ws.per_frame = 2;
  ws.feat_dim = mc.d_v;
  ws.min_rounds = 3;
  ws.max_rounds = 3;

  const WorldCatalog catalog(ws.feat_dim, ws.catalog_seed);
  const auto samples = generate_dataset(ws, catalog, seed, 3, "fd");
  const DialogueSample& sample = samples.back();  // round 3: non-trivial history

  ScgaModel model(mc, catalog.vocabulary(), seed);
  const std::uint64_t noise_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  auto forward = [&] {
    // Relaxed selection with frozen rng: deterministic and differentiable.
    model.rng().set_state(Rng(noise_seed).state());
    return model.teacher_forced_loss(sample, ForwardMode::relaxed());
  };

  std::vector<Tensor> leaves;
  for (const auto& p : model.params().items()) leaves.push_back(p->tensor);
  Rng coord_rng(seed + 1);
  const GradCheckReport report = gradcheck(forward, leaves, 1e-5, 6, &coord_rng);

  OpCheck out;
  out.name = "end_to_end_loss";
  out.max_rel_err = report.max_rel_err;
  out.coords = report.coords_checked;
  return out;
}

double suite_max_err(const std::vector<OpCheck>& checks) {
  double worst = 0.0;
  for (const auto& c : checks) worst = std::max(worst, c.max_rel_err);
  return worst;
}

}  // namespace scga
