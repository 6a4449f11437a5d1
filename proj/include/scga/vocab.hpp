#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scga {

// Fixed-index token table. Indices 0..3 are reserved for the special tokens;
// file format is one non-reserved token per line, so line number == index - 4.
class Vocabulary {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr int kPad = 3;

  Vocabulary();

  // Adds a token if absent; returns its index either way.
  int add(const std::string& token);
  // Index lookup; unknown tokens map to <unk>.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<int> ids(const std::vector<std::string>& tokens) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Lowercases and splits on whitespace and punctuation; only [a-z0-9] runs
// survive as tokens.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace scga
