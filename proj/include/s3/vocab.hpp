#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace s3 {

/// String <-> id table. Id 0 is always the unknown entry.
class Vocab {
 public:
  static constexpr std::size_t kUnk = 0;

  Vocab() : Vocab("<unk>") {}
  explicit Vocab(const std::string& unk_token) { add(unk_token); }

  std::size_t add(const std::string& token);
  std::size_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Token vocabulary ids reserved for special symbols.
struct SpecialTokens {
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kPad = 1;
  static constexpr std::size_t kBos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kCls = 4;
  static constexpr std::size_t kSep = 5;
};

/// A vocabulary pre-filled with <unk> <pad> <bos> <eos> [CLS] [SEP].
Vocab make_token_vocab();

}  // namespace s3
