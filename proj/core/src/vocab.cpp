#include "gdr/vocab.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "gdr/error.hpp"

namespace gdr {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  };
  for (unsigned char ch : text) {
    const char c = static_cast<char>(std::tolower(ch));
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      word.push_back(c);
    } else {
      flush();
      out.emplace_back(1, c);
    }
  }
  flush();
  return out;
}

Vocab::Vocab() {
  for (const std::string& tok : reserved()) {
    token_to_id_[tok] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(tok);
  }
}

const std::vector<std::string>& Vocab::reserved() {
  static const std::vector<std::string> kReserved = {"<pad>", "<bos>", "<eos>", "<unk>", "<mask>"};
  return kReserved;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  for (const std::string& tok : tokens) {
    if (v.token_to_id_.count(tok)) {
      throw std::invalid_argument("Vocab: duplicate token '" + tok + "'");
    }
    v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(tok);
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::invalid_argument("Vocab: id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

TokenSequence Vocab::encode(const std::string& text) const {
  TokenSequence ids;
  for (const std::string& tok : tokenize(text)) ids.push_back(id(tok));
  return ids;
}

std::string Vocab::decode(const TokenSequence& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("vocab: cannot open '" + path + "' for writing");
  for (const std::string& tok : id_to_token_) os << tok << '\n';
  if (!os) throw DataError("vocab: write to '" + path + "' failed");
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("vocab: cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  if (lines.size() < reserved().size()) {
    throw DataError("vocab: '" + path + "' is missing reserved tokens");
  }
  for (std::size_t i = 0; i < reserved().size(); ++i) {
    if (lines[i] != reserved()[i]) {
      throw DataError("vocab: reserved token mismatch at line " + std::to_string(i + 1));
    }
  }
  return from_tokens({lines.begin() + static_cast<std::ptrdiff_t>(reserved().size()), lines.end()});
}

}  // namespace gdr
