#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>

#include "rnncomp/errors.hpp"
#include "rnncomp/tasks.hpp"

namespace rnncomp::tasks {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80; }

// Byte offset of the first malformed sequence, or npos.
std::size_t utf8_error(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const std::uint32_t min_cp[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::string_view::npos;
}

// Length of a clitic starting with an apostrophe at `i`, or 0.
std::size_t clitic_at(const std::string& s, std::size_t i) {
  if (i >= s.size() || s[i] != '\'') return 0;
  for (std::string_view c : {"ll", "re", "ve", "s", "m", "d"}) {
    if (s.compare(i + 1, c.size(), c) == 0) {
      const std::size_t end = i + 1 + c.size();
      if (end >= s.size() || !is_word(static_cast<unsigned char>(s[end]))) return 1 + c.size();
    }
  }
  return 0;
}

}  // namespace

std::vector<std::string> tokenize_corpus(std::string_view text, const std::string& source) {
  if (const std::size_t bad = utf8_error(text); bad != std::string_view::npos) {
    throw IngestionError(source, bad, "invalid UTF-8");
  }
  std::string s(text);
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
    } else if (const std::size_t n = clitic_at(s, i); n > 0) {
      out.push_back(s.substr(i, n));
      i += n;
    } else if (is_word(c)) {
      std::size_t j = i;
      while (j < s.size() && is_word(static_cast<unsigned char>(s[j]))) ++j;
      const bool nt = s[j - 1] == 'n' && s.compare(j, 2, "'t") == 0 &&
                      (j + 2 >= s.size() || !is_word(static_cast<unsigned char>(s[j + 2])));
      if (nt) {
        if (j - 1 > i) out.push_back(s.substr(i, j - 1 - i));
        out.emplace_back("n't");
        i = j + 2;
      } else {
        out.push_back(s.substr(i, j - i));
        i = j;
      }
    } else {
      out.emplace_back(1, s[i]);
      ++i;
    }
  }
  return out;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kUnknown || tokens[1] != kEndOfText) {
    tokens.insert(tokens.begin(), {std::string(kUnknown), std::string(kEndOfText)});
  }
  tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DomainError("Vocab: duplicate token '" + tokens_[i] + "'");
    }
  }
}

int Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknownId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw DomainError("Vocab: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Vocab build_vocab(std::span<const std::string> tokens, std::optional<std::size_t> max_size) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : tokens) {
    if (t != Vocab::kUnknown && t != Vocab::kEndOfText) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (max_size && ranked.size() > *max_size) ranked.resize(*max_size);
  std::vector<std::string> list{std::string(Vocab::kUnknown), std::string(Vocab::kEndOfText)};
  for (auto& [t, n] : ranked) list.push_back(std::move(t));
  return Vocab(std::move(list));
}

LmBatchStream::LmBatchStream(std::vector<int> ids, std::size_t batch, std::size_t window) : window_(window) {
  if (batch == 0 || window == 0) throw DomainError("lm_batches: batch and window must be positive");
  if (ids.size() < batch * (window + 1)) {
    throw DomainError("lm_batches: corpus of " + std::to_string(ids.size()) + " tokens is shorter than batch x (window + 1)");
  }
  const std::size_t base = ids.size() / batch;
  const std::size_t extra = ids.size() % batch;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    streams_.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                          ids.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
}

std::vector<LmWindow> LmBatchStream::next() {
  std::vector<LmWindow> out;
  for (std::size_t b = 0; b < streams_.size(); ++b) {
    const auto& s = streams_[b];
    if (cursor_ + 1 >= s.size()) continue;
    const std::size_t len = std::min(window_, s.size() - 1 - cursor_);
    LmWindow w;
    w.stream = b;
    w.inputs.assign(s.begin() + static_cast<std::ptrdiff_t>(cursor_),
                    s.begin() + static_cast<std::ptrdiff_t>(cursor_ + len));
    w.targets.assign(s.begin() + static_cast<std::ptrdiff_t>(cursor_ + 1),
                     s.begin() + static_cast<std::ptrdiff_t>(cursor_ + 1 + len));
    out.push_back(std::move(w));
  }
  cursor_ += window_;
  return out;
}

LmBatchStream lm_batches(std::vector<int> ids, std::size_t batch, std::size_t window) {
  return LmBatchStream(std::move(ids), batch, window);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rnncomp::tasks
