#pragma once

#include <cstdint>
#include <memory>

#include "sje/dataset.hpp"
#include "sje/tensor.hpp"
#include "sje/text.hpp"

namespace sje {

enum class EncoderFamily { bow, wordvec_avg, attributes, cnn, lstm, cnn_rnn };

EncoderFamily encoder_family_from_string(const std::string& s);
std::string to_string(EncoderFamily family);

enum class RnnCell { vanilla, lstm };

RnnCell rnn_cell_from_string(const std::string& s);
std::string to_string(RnnCell cell);

struct ConvBlock {
  int channels = 0;
  int kernel = 0;
  int pool = 1;
};

struct EncoderSpec {
  EncoderFamily family = EncoderFamily::cnn;
  TextLevel level = TextLevel::character;
  int embed_dim = 1024;
  int max_len = 0;  // 0 -> level default (30 word / 201 char)
  // Convolutional front-end (cnn, cnn-rnn). Empty -> level default: char
  // level 3 blocks of 64 channels, kernels 7/7/3, pools 3/3/2 (201 -> 8);
  // word level 2 blocks of 128 channels, kernels 3/3, pools 1/3 (30 -> 8).
  std::vector<ConvBlock> conv_blocks;
  std::vector<int> fc_widths;  // hidden widths between flatten and embed (cnn)
  int hidden_dim = 256;        // recurrent hidden width (lstm, cnn-rnn)
  int token_embed_dim = 128;   // trainable input embedding width (lstm)
  RnnCell rnn_cell = RnnCell::vanilla;  // cnn-rnn recurrence
  int rnn_steps = 8;  // temporal frames the cnn front-end must reduce to
  std::uint64_t seed = 0;

  int effective_max_len() const;
  std::vector<ConvBlock> effective_conv_blocks() const;
};

// One description as consumed by an encoder: the tokenized caption plus the
// class attribute vector (used only by the attributes family).
struct TextInstance {
  TextSequence sequence;
  std::vector<double> attributes;
};

// phi(t): maps one description to an embed_dim vector. encode() records onto
// the active tape, so the output is differentiable w.r.t. params().
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;

  const EncoderSpec& spec() const { return spec_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  virtual Tensor encode(const TextInstance& input) const = 0;

 protected:
  explicit TextEncoder(EncoderSpec spec) : spec_(std::move(spec)) {}

  EncoderSpec spec_;
  ParameterSet params_;
};

// Builds the encoder named by spec.family. The tables are copied into the
// encoder; attribute_dim / word_vectors are only required by the families
// that consume them.
std::unique_ptr<TextEncoder> build_text_encoder(
    const EncoderSpec& spec, const Vocabulary& vocabulary,
    const Alphabet& alphabet, const WordVectorTable& word_vectors,
    int attribute_dim);

enum class ImageEncoderMode { identity, linear_projection };

ImageEncoderMode image_encoder_mode_from_string(const std::string& s);
std::string to_string(ImageEncoderMode mode);

// theta(v): identity keeps the precomputed features as-is (requires
// feature_dim == embed_dim and trains nothing); linear-projection learns a
// bias-free map onto the embedding space.
class ImageEncoder {
 public:
  ImageEncoder(ImageEncoderMode mode, int feature_dim, int embed_dim,
               std::uint64_t seed);

  Tensor encode(const std::vector<double>& features) const;

  ImageEncoderMode mode() const { return mode_; }
  int feature_dim() const { return feature_dim_; }
  int embed_dim() const { return embed_dim_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  ImageEncoderMode mode_;
  int feature_dim_;
  int embed_dim_;
  ParameterSet params_;
};

}  // namespace sje
