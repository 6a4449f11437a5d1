#include "scga/optim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "scga/errors.hpp"

namespace scga {

Parameter& ParameterStore::emplace(const std::string& name, Shape shape,
                                   std::vector<double> data) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("ParameterStore: duplicate parameter name '" + name + "'");
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->tensor = Tensor::leaf(std::move(shape), std::move(data));
  p->m.assign(p->tensor.size(), 0.0);
  p->v.assign(p->tensor.size(), 0.0);
  items_.push_back(std::move(p));
  return *items_.back();
}

Parameter& ParameterStore::uniform(const std::string& name, Shape shape, std::size_t fan_in,
                                   Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return emplace(name, std::move(shape), std::move(data));
}

Parameter& ParameterStore::zeros(const std::string& name, Shape shape) {
  return emplace(name, shape, std::vector<double>(shape_size(shape), 0.0));
}

Parameter& ParameterStore::ones(const std::string& name, Shape shape) {
  return emplace(name, shape, std::vector<double>(shape_size(shape), 1.0));
}

Parameter* ParameterStore::find(std::string_view name) {
  for (auto& p : items_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p->tensor.size();
  return n;
}

void ParameterStore::zero_all_grads() {
  for (auto& p : items_) p->tensor.zero_grad();
}

void adam_step(ParameterStore& params, double lr, const AdamConfig& cfg) {
  for (auto& p : params.items()) {
    if (!p->tensor.has_grad()) {
      throw std::invalid_argument("adam_step: parameter '" + p->name +
                                  "' has no gradient; run backward() first");
    }
    p->steps += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->steps));
    auto& data = p->tensor.data();
    auto& grad = p->tensor.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      p->m[i] = cfg.beta1 * p->m[i] + (1.0 - cfg.beta1) * g;
      p->v[i] = cfg.beta2 * p->v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p->m[i] / bc1;
      const double vhat = p->v[i] / bc2;
      data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p->tensor.zero_grad();
  }
}

// ---------------------------------------------------------------------------
// checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[] = "SCGA-CKPT-1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_f64_span(std::ostream& os, const std::vector<double>& xs) {
  for (double x : xs) put_f64(os, x);
}

void get_f64_span(std::istream& is, std::vector<double>& xs) {
  for (auto& x : xs) x = get_f64(is);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& params,
                     const TrainerState& state) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  put_u64(os, params.count());
  for (const auto& p : params.items()) {
    put_u32(os, static_cast<std::uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const auto& shape = p->tensor.shape();
    put_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_u64(os, d);
    put_u64(os, p->steps);
    put_f64_span(os, p->tensor.data());
    put_f64_span(os, p->m);
    put_f64_span(os, p->v);
  }
  put_u64(os, state.global_step);
  put_u64(os, state.epoch);
  put_f64(os, state.best_val_loss);
  for (auto w : state.model_rng) put_u64(os, w);
  for (auto w : state.data_rng) put_u64(os, w);
  if (!os) throw DataError("short write while saving checkpoint: " + path);
}

TrainerState load_checkpoint(const std::string& path, ParameterStore& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[kMagicLen];
  is.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!is || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw DataError("not a SCGA-CKPT-1 checkpoint: " + path);
  }
  const std::uint64_t count = get_u64(is);
  if (count != params.count()) {
    throw DataError("checkpoint has " + std::to_string(count) + " parameters, model expects " +
                    std::to_string(params.count()));
  }
  for (const auto& p : params.items()) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (name != p->name) {
      throw DataError("checkpoint parameter '" + name + "' does not match model parameter '" +
                      p->name + "'");
    }
    const std::uint32_t ndim = get_u32(is);
    Shape shape(ndim);
    for (auto& d : shape) d = get_u64(is);
    if (shape != p->tensor.shape()) {
      throw DataError("checkpoint shape " + shape_str(shape) + " for '" + name +
                      "' does not match model shape " + shape_str(p->tensor.shape()));
    }
    p->steps = get_u64(is);
    get_f64_span(is, p->tensor.data());
    get_f64_span(is, p->m);
    get_f64_span(is, p->v);
  }
  TrainerState state;
  state.global_step = get_u64(is);
  state.epoch = get_u64(is);
  state.best_val_loss = get_f64(is);
  for (auto& w : state.model_rng) w = get_u64(is);
  for (auto& w : state.data_rng) w = get_u64(is);
  if (!is) throw DataError("truncated checkpoint: " + path);
  return state;
}

}  // namespace scga
