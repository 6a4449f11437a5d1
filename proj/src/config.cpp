#include "scga/config.hpp"

#include <fstream>
#include <sstream>

#include "scga/errors.hpp"

namespace scga {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (is.fail() || !(is >> std::ws).eof()) {
    throw ConfigError("config key '" + key + "': cannot parse value '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::istringstream is(value);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<int>(key, item));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string int_list_str(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

TrainConfig Config::train_config() const {
  TrainConfig t;
  t.seed = seed;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.warmup = warmup;
  t.max_steps = max_steps;
  return t;
}

void config_set(Config& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "d") cfg.model.d = parse_number<std::size_t>(key, value);
  else if (key == "d_v") { cfg.model.d_v = parse_number<std::size_t>(key, value);
                           cfg.world.feat_dim = cfg.model.d_v; }
  else if (key == "K") cfg.model.heads = parse_number<std::size_t>(key, value);
  else if (key == "tau_s") cfg.model.tau_s = parse_number<double>(key, value);
  else if (key == "tau_t") cfg.model.tau_t = parse_number<double>(key, value);
  else if (key == "distances") cfg.model.distances = parse_int_list(key, value);
  else if (key == "heads_per_distance") cfg.model.heads_per_distance = parse_int_list(key, value);
  else if (key == "temperature") cfg.model.temperature = parse_number<double>(key, value);
  else if (key == "dropout") cfg.model.dropout = parse_number<double>(key, value);
  else if (key == "max_len") cfg.model.max_decode_len = parse_number<std::size_t>(key, value);
  else if (key == "max_positions") cfg.model.max_positions = parse_number<std::size_t>(key, value);
  else if (key == "gn_residual") cfg.model.gn_residual = parse_bool(key, value);
  else if (key == "decoder_ffn") cfg.model.decoder_ffn = parse_bool(key, value);
  else if (key == "T") cfg.world.frames = parse_number<std::size_t>(key, value);
  else if (key == "O") cfg.world.per_frame = parse_number<std::size_t>(key, value);
  else if (key == "drift") cfg.world.drift = parse_number<double>(key, value);
  else if (key == "appearance_noise") cfg.world.appearance_noise = parse_number<double>(key, value);
  else if (key == "min_rounds") cfg.world.min_rounds = parse_number<std::size_t>(key, value);
  else if (key == "max_rounds") cfg.world.max_rounds = parse_number<std::size_t>(key, value);
  else if (key == "catalog_seed") cfg.world.catalog_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "n_train") cfg.n_train = parse_number<std::size_t>(key, value);
  else if (key == "n_eval") cfg.n_eval = parse_number<std::size_t>(key, value);
  else if (key == "epochs") cfg.epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "warmup") cfg.warmup = parse_number<std::uint64_t>(key, value);
  else if (key == "max_steps") cfg.max_steps = parse_number<std::size_t>(key, value);
  else if (key == "beam") cfg.beam = parse_number<int>(key, value);
  else if (key == "length_penalty") cfg.length_penalty = parse_number<double>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config file: " + path);
  Config cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + " line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string dump_config(const Config& cfg) {
  std::ostringstream os;
  os << "seed = " << cfg.seed << "\n";
  os << "d = " << cfg.model.d << "\n";
  os << "d_v = " << cfg.model.d_v << "\n";
  os << "K = " << cfg.model.heads << "\n";
  os << "tau_s = " << cfg.model.tau_s << "\n";
  os << "tau_t = " << cfg.model.tau_t << "\n";
  os << "distances = " << int_list_str(cfg.model.distances) << "\n";
  os << "heads_per_distance = " << int_list_str(cfg.model.heads_per_distance) << "\n";
  os << "temperature = " << cfg.model.temperature << "\n";
  os << "dropout = " << cfg.model.dropout << "\n";
  os << "max_len = " << cfg.model.max_decode_len << "\n";
  os << "max_positions = " << cfg.model.max_positions << "\n";
  os << "gn_residual = " << (cfg.model.gn_residual ? "true" : "false") << "\n";
  os << "decoder_ffn = " << (cfg.model.decoder_ffn ? "true" : "false") << "\n";
  os << "T = " << cfg.world.frames << "\n";
  os << "O = " << cfg.world.per_frame << "\n";
  os << "drift = " << cfg.world.drift << "\n";
  os << "appearance_noise = " << cfg.world.appearance_noise << "\n";
  os << "min_rounds = " << cfg.world.min_rounds << "\n";
  os << "max_rounds = " << cfg.world.max_rounds << "\n";
  os << "catalog_seed = " << cfg.world.catalog_seed << "\n";
  os << "n_train = " << cfg.n_train << "\n";
  os << "n_eval = " << cfg.n_eval << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "warmup = " << cfg.warmup << "\n";
  os << "max_steps = " << cfg.max_steps << "\n";
  os << "beam = " << cfg.beam << "\n";
  os << "length_penalty = " << cfg.length_penalty << "\n";
  return os.str();
}

}  // namespace scga
