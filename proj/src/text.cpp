#include "sje/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

namespace sje {

TextLevel text_level_from_string(const std::string& s) {
  if (s == "word") return TextLevel::word;
  if (s == "char" || s == "character") return TextLevel::character;
  throw std::invalid_argument("unknown text level: '" + s + "'");
}

std::string to_string(TextLevel level) {
  return level == TextLevel::word ? "word" : "char";
}

Alphabet Alphabet::standard() {
  return Alphabet("abcdefghijklmnopqrstuvwxyz0123456789 .,;:!?'\"()-");
}

Alphabet::Alphabet(std::string chars) : chars_(std::move(chars)) {
  if (chars_.empty()) throw std::invalid_argument("alphabet must not be empty");
  std::memset(ids_, 0, sizeof(ids_));
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    const auto c = static_cast<unsigned char>(chars_[i]);
    if (ids_[c] != 0) {
      throw std::invalid_argument(std::string("duplicate alphabet character '") +
                                  chars_[i] + "'");
    }
    ids_[c] = static_cast<int>(i) + 1;
  }
}

int Alphabet::id_of(char c) const { return ids_[static_cast<unsigned char>(c)]; }

char Alphabet::char_of(int id) const {
  if (id < 1 || id >= size()) {
    throw std::out_of_range("alphabet id " + std::to_string(id) +
                            " out of range");
  }
  return chars_[static_cast<std::size_t>(id - 1)];
}

Vocabulary::Vocabulary(std::vector<std::string> sorted_words)
    : words_(std::move(sorted_words)) {
  for (std::size_t i = 1; i < words_.size(); ++i) {
    if (!(words_[i - 1] < words_[i])) {
      throw std::invalid_argument("vocabulary words must be sorted and unique");
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& normalized_texts) {
  std::vector<std::string> words;
  for (const auto& text : normalized_texts) {
    for (auto& w : split_words(text)) words.push_back(std::move(w));
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return Vocabulary(std::move(words));
}

int Vocabulary::id_of(const std::string& word) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), word);
  if (it == words_.end() || *it != word) return kUnkId;
  return static_cast<int>(it - words_.begin()) + 2;
}

const std::string& Vocabulary::word_of(int id) const {
  static const std::string pad = "<pad>";
  static const std::string unk = "<unk>";
  if (id == kPadId) return pad;
  if (id == kUnkId) return unk;
  if (id < 0 || id >= size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) +
                            " out of range");
  }
  return words_[static_cast<std::size_t>(id - 2)];
}

std::string normalize_text(const std::string& raw, TextLevel level,
                           const Alphabet& alphabet) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char rc : raw) {
    char c = static_cast<char>(
        std::tolower(static_cast<unsigned char>(rc)));
    if (std::isspace(static_cast<unsigned char>(c))) c = ' ';
    if (c != ' ' && !alphabet.contains(c)) {
      if (level == TextLevel::character) continue;  // dropped
      c = ' ';                                      // word separator
    }
    if (c == ' ') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_words(const std::string& normalized) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start < normalized.size()) {
    std::size_t end = normalized.find(' ', start);
    if (end == std::string::npos) end = normalized.size();
    if (end > start) words.push_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

namespace {

TextSequence pack(std::vector<int> ids, TextLevel level, int max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  TextSequence seq;
  seq.level = level;
  seq.true_length = std::min<int>(max_len, static_cast<int>(ids.size()));
  ids.resize(static_cast<std::size_t>(max_len), 0);
  seq.ids = std::move(ids);
  return seq;
}

}  // namespace

TextSequence tokenize_words(const std::string& raw, const Vocabulary& vocab,
                            const Alphabet& alphabet, int max_len) {
  const std::string normalized = normalize_text(raw, TextLevel::word, alphabet);
  auto words = split_words(normalized);
  if (words.empty()) {
    throw EmptyCaptionError("caption is empty after normalization: '" + raw + "'");
  }
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id_of(w));
  return pack(std::move(ids), TextLevel::word, max_len);
}

TextSequence tokenize_chars(const std::string& raw, const Alphabet& alphabet,
                            int max_len) {
  const std::string normalized =
      normalize_text(raw, TextLevel::character, alphabet);
  if (normalized.empty()) {
    throw EmptyCaptionError("caption is empty after normalization: '" + raw + "'");
  }
  std::vector<int> ids;
  ids.reserve(normalized.size());
  for (char c : normalized) ids.push_back(alphabet.id_of(c));
  return pack(std::move(ids), TextLevel::character, max_len);
}

std::string detokenize(const TextSequence& seq, const Vocabulary& vocab,
                       const Alphabet& alphabet) {
  std::string out;
  for (int i = 0; i < seq.true_length; ++i) {
    const int id = seq.ids[static_cast<std::size_t>(i)];
    if (seq.level == TextLevel::word) {
      if (i) out.push_back(' ');
      out += vocab.word_of(id);
    } else {
      out.push_back(alphabet.char_of(id));
    }
  }
  return out;
}

}  // namespace sje
