#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace gdr {

using TokenSequence = std::vector<int>;

constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kUnkId = 3;
constexpr int kMaskId = 4;
constexpr int kReservedTokens = 5;

// Lowercases and splits on whitespace, peeling punctuation off as separate
// tokens ("it's fine!" -> it's fine !).
std::vector<std::string> tokenize(const std::string& text);

// Token table with fixed reserved entries at ids 0..4 (pad, bos, eos, unk,
// mask) followed by the regular vocabulary. Files are UTF-8, one token per
// line, line number = id.
class Vocab {
 public:
  Vocab();
  static const std::vector<std::string>& reserved();
  static Vocab from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return id_to_token_.size(); }
  int id(const std::string& token) const;  // kUnkId when absent
  const std::string& token(int id) const;

  // Tokenizes and maps to ids; unknown words become kUnkId.
  TokenSequence encode(const std::string& text) const;
  // Joins tokens with spaces; pad/bos/eos are skipped, mask is rendered.
  std::string decode(const TokenSequence& ids) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace gdr
