#include "scga/vocab.hpp"

#include <cctype>
#include <fstream>

#include "scga/errors.hpp"

namespace scga {

Vocabulary::Vocabulary() {
  for (const char* t : {"<bos>", "<eos>", "<unk>", "<pad>"}) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw std::invalid_argument("Vocabulary: token id " + std::to_string(id) +
                                " out of range (size " + std::to_string(size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open vocabulary file for writing: " + path);
  for (std::size_t i = 4; i < tokens_.size(); ++i) os << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (v.contains(line)) {
      throw DataError("vocabulary file line " + std::to_string(line_no) + ": duplicate token '" +
                      line + "'");
    }
    v.add(line);
  }
  return v;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace scga
