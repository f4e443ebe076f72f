#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sje {

enum class TextLevel { word, character };

constexpr int kDefaultWordLen = 30;
constexpr int kDefaultCharLen = 201;

TextLevel text_level_from_string(const std::string& s);
std::string to_string(TextLevel level);

// Thrown when a caption normalizes to nothing.
class EmptyCaptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Character table; id 0 is reserved for padding, characters get ids 1..N in
// table order. Characters produced by normalization are always members.
class Alphabet {
 public:
  // Lowercase letters, digits, space and basic punctuation.
  static Alphabet standard();
  explicit Alphabet(std::string chars);

  bool contains(char c) const { return id_of(c) > 0; }
  int id_of(char c) const;        // 0 when absent
  char char_of(int id) const;     // ids 1..size()-1
  int size() const { return static_cast<int>(chars_.size()) + 1; }
  const std::string& chars() const { return chars_; }

 private:
  std::string chars_;
  int ids_[256];
};

// Word table; id 0 = padding, id 1 = unknown word, words get ids from 2 in
// sorted order so the mapping is stable regardless of caption order.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> sorted_words);
  static Vocabulary build(const std::vector<std::string>& normalized_texts);

  int id_of(const std::string& word) const;  // kUnkId when missing
  const std::string& word_of(int id) const;
  int size() const { return static_cast<int>(words_.size()) + 2; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;  // sorted, id = index + 2
};

// Fixed-length, zero-padded token id sequence.
struct TextSequence {
  std::vector<int> ids;  // exactly max_len entries
  int true_length = 0;
  TextLevel level = TextLevel::word;

  int max_len() const { return static_cast<int>(ids.size()); }
};

// Lowercases, maps characters outside the alphabet (dropped at character
// level, treated as separators at word level), collapses whitespace runs and
// trims the ends.
std::string normalize_text(const std::string& raw, TextLevel level,
                           const Alphabet& alphabet);

std::vector<std::string> split_words(const std::string& normalized);

TextSequence tokenize_words(const std::string& raw, const Vocabulary& vocab,
                            const Alphabet& alphabet,
                            int max_len = kDefaultWordLen);
TextSequence tokenize_chars(const std::string& raw, const Alphabet& alphabet,
                            int max_len = kDefaultCharLen);

std::string detokenize(const TextSequence& seq, const Vocabulary& vocab,
                       const Alphabet& alphabet);

}  // namespace sje
