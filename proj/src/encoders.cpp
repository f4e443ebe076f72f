#include "sje/encoders.hpp"

#include <iostream>
#include <random>
#include <stdexcept>

namespace sje {

EncoderFamily encoder_family_from_string(const std::string& s) {
  if (s == "bow") return EncoderFamily::bow;
  if (s == "wordvec-avg") return EncoderFamily::wordvec_avg;
  if (s == "attributes") return EncoderFamily::attributes;
  if (s == "cnn") return EncoderFamily::cnn;
  if (s == "lstm") return EncoderFamily::lstm;
  if (s == "cnn-rnn") return EncoderFamily::cnn_rnn;
  throw std::invalid_argument("unknown encoder family: '" + s + "'");
}

std::string to_string(EncoderFamily family) {
  switch (family) {
    case EncoderFamily::bow: return "bow";
    case EncoderFamily::wordvec_avg: return "wordvec-avg";
    case EncoderFamily::attributes: return "attributes";
    case EncoderFamily::cnn: return "cnn";
    case EncoderFamily::lstm: return "lstm";
    case EncoderFamily::cnn_rnn: return "cnn-rnn";
  }
  throw std::logic_error("unreachable encoder family");
}

RnnCell rnn_cell_from_string(const std::string& s) {
  if (s == "vanilla") return RnnCell::vanilla;
  if (s == "lstm") return RnnCell::lstm;
  throw std::invalid_argument("unknown rnn cell: '" + s + "'");
}

std::string to_string(RnnCell cell) {
  return cell == RnnCell::vanilla ? "vanilla" : "lstm";
}

ImageEncoderMode image_encoder_mode_from_string(const std::string& s) {
  if (s == "identity") return ImageEncoderMode::identity;
  if (s == "linear-projection") return ImageEncoderMode::linear_projection;
  throw std::invalid_argument("unknown image encoder mode: '" + s + "'");
}

std::string to_string(ImageEncoderMode mode) {
  return mode == ImageEncoderMode::identity ? "identity" : "linear-projection";
}

int EncoderSpec::effective_max_len() const {
  if (max_len > 0) return max_len;
  return level == TextLevel::word ? kDefaultWordLen : kDefaultCharLen;
}

std::vector<ConvBlock> EncoderSpec::effective_conv_blocks() const {
  if (!conv_blocks.empty()) return conv_blocks;
  if (level == TextLevel::character) {
    // 201 -> 195 -> 65 -> 59 -> 19 -> 17 -> 8
    return {{64, 7, 3}, {64, 7, 3}, {64, 3, 2}};
  }
  // 30 -> 28 -> 28 -> 26 -> 8
  return {{128, 3, 1}, {128, 3, 3}};
}

namespace {

void check_level(const TextSequence& seq, TextLevel expected,
                 const char* family) {
  if (seq.level != expected) {
    throw std::invalid_argument(std::string(family) + " encoder expects " +
                                to_string(expected) + "-level input, got " +
                                to_string(seq.level));
  }
}

Tensor constant_vector(const std::vector<double>& v) {
  return Tensor::from_values({static_cast<int>(v.size())}, v);
}

// One column per position, one row per non-padding id; padding id 0 maps to
// an all-zero column so extra padding cannot change any downstream value.
Tensor one_hot_sequence(const TextSequence& seq, int n_rows) {
  const int len = seq.max_len();
  Tensor out = Tensor::zeros({n_rows, len});
  auto& v = out.values();
  for (int t = 0; t < len; ++t) {
    const int id = seq.ids[static_cast<std::size_t>(t)];
    if (id == 0) continue;
    if (id < 1 || id > n_rows) {
      throw std::invalid_argument("token id " + std::to_string(id) +
                                  " outside table of size " +
                                  std::to_string(n_rows + 1));
    }
    v[static_cast<std::size_t>(id - 1) * static_cast<std::size_t>(len) +
      static_cast<std::size_t>(t)] = 1.0;
  }
  return out;
}

// conv -> bias -> relu -> maxpool blocks; validates the temporal arithmetic
// at construction so misconfigured stacks fail before training starts.
struct ConvStack {
  std::vector<Tensor> kernels;
  std::vector<Tensor> biases;
  std::vector<int> pools;
  int out_channels = 0;
  int out_len = 0;

  ConvStack(const std::vector<ConvBlock>& blocks, int in_channels, int in_len,
            ParameterSet& params, std::mt19937_64& rng) {
    if (blocks.empty()) throw std::invalid_argument("empty conv stack");
    int channels = in_channels;
    int len = in_len;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const ConvBlock& block = blocks[b];
      if (block.channels < 1 || block.kernel < 1 || block.pool < 1) {
        throw std::invalid_argument("conv block " + std::to_string(b) +
                                    " needs positive channels/kernel/pool");
      }
      const int conv_len = len - block.kernel + 1;
      if (conv_len < 1) {
        throw std::invalid_argument(
            "conv block " + std::to_string(b) + " kernel " +
            std::to_string(block.kernel) + " exceeds remaining length " +
            std::to_string(len));
      }
      const int pooled = conv_len / block.pool;
      if (pooled < 1) {
        throw std::invalid_argument(
            "conv block " + std::to_string(b) + " pool " +
            std::to_string(block.pool) + " exceeds remaining length " +
            std::to_string(conv_len));
      }
      const std::string prefix = "conv" + std::to_string(b);
      kernels.push_back(params.add(
          prefix + ".weight",
          glorot_uniform({block.channels, channels, block.kernel},
                         channels * block.kernel, block.channels * block.kernel,
                         rng)));
      biases.push_back(params.add(prefix + ".bias",
                                  Tensor::zeros({block.channels}, true)));
      pools.push_back(block.pool);
      channels = block.channels;
      len = pooled;
    }
    out_channels = channels;
    out_len = len;
  }

  Tensor apply(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t b = 0; b < kernels.size(); ++b) {
      h = relu(add_channel_bias(conv1d(h, kernels[b]), biases[b]));
      if (pools[b] > 1) h = maxpool1d(h, pools[b]);
    }
    return h;
  }
};

struct VanillaCell {
  Tensor w, u, b;

  VanillaCell(int in_dim, int hidden, const std::string& prefix,
              ParameterSet& params, std::mt19937_64& rng) {
    w = params.add(prefix + ".w",
                   glorot_uniform({hidden, in_dim}, in_dim, hidden, rng));
    u = params.add(prefix + ".u",
                   glorot_uniform({hidden, hidden}, hidden, hidden, rng));
    b = params.add(prefix + ".b", Tensor::zeros({hidden}, true));
  }

  Tensor step(const Tensor& x, const Tensor& h) const {
    return tanh(add(add(matvec(w, x), matvec(u, h)), b));
  }
};

// Input, forget, output and candidate gates with their own input/recurrent
// weights; biases start at zero.
struct LstmCell {
  Tensor wi, ui, bi, wf, uf, bf, wo, uo, bo, wg, ug, bg;

  LstmCell(int in_dim, int hidden, const std::string& prefix,
           ParameterSet& params, std::mt19937_64& rng) {
    auto gate = [&](const char* name, Tensor& wx, Tensor& uh, Tensor& bias) {
      wx = params.add(prefix + ".w" + name,
                      glorot_uniform({hidden, in_dim}, in_dim, hidden, rng));
      uh = params.add(prefix + ".u" + name,
                      glorot_uniform({hidden, hidden}, hidden, hidden, rng));
      bias = params.add(prefix + ".b" + name, Tensor::zeros({hidden}, true));
    };
    gate("i", wi, ui, bi);
    gate("f", wf, uf, bf);
    gate("o", wo, uo, bo);
    gate("g", wg, ug, bg);
  }

  std::pair<Tensor, Tensor> step(const Tensor& x, const Tensor& h,
                                 const Tensor& c) const {
    const Tensor i = sigmoid(add(add(matvec(wi, x), matvec(ui, h)), bi));
    const Tensor f = sigmoid(add(add(matvec(wf, x), matvec(uf, h)), bf));
    const Tensor o = sigmoid(add(add(matvec(wo, x), matvec(uo, h)), bo));
    const Tensor g = tanh(add(add(matvec(wg, x), matvec(ug, h)), bg));
    const Tensor c_next = add(mul(f, c), mul(i, g));
    const Tensor h_next = mul(o, tanh(c_next));
    return {h_next, c_next};
  }
};

class BowEncoder final : public TextEncoder {
 public:
  BowEncoder(EncoderSpec spec, const Vocabulary& vocabulary)
      : TextEncoder(std::move(spec)), n_words_(vocabulary.size() - 2) {
    if (spec_.level != TextLevel::word) {
      throw std::invalid_argument("bow encoder is word-level only");
    }
    if (n_words_ < 1) {
      throw std::invalid_argument("bow encoder needs a nonempty vocabulary");
    }
    std::mt19937_64 rng(spec_.seed);
    weight_ = params_.add("proj.weight",
                          glorot_uniform({spec_.embed_dim, n_words_}, n_words_,
                                         spec_.embed_dim, rng));
  }

  Tensor encode(const TextInstance& input) const override {
    check_level(input.sequence, TextLevel::word, "bow");
    // Presence indicator over real words; padding and unk contribute nothing.
    std::vector<double> indicator(static_cast<std::size_t>(n_words_), 0.0);
    for (int t = 0; t < input.sequence.true_length; ++t) {
      const int id = input.sequence.ids[static_cast<std::size_t>(t)];
      if (id >= 2) indicator[static_cast<std::size_t>(id - 2)] = 1.0;
    }
    return matvec(weight_, constant_vector(indicator));
  }

 private:
  int n_words_;
  Tensor weight_;
};

class WordvecAvgEncoder final : public TextEncoder {
 public:
  WordvecAvgEncoder(EncoderSpec spec, const Vocabulary& vocabulary,
                    const WordVectorTable& word_vectors)
      : TextEncoder(std::move(spec)),
        vocabulary_(vocabulary),
        word_vectors_(word_vectors) {
    if (spec_.level != TextLevel::word) {
      throw std::invalid_argument("wordvec-avg encoder is word-level only");
    }
    if (word_vectors_.empty()) {
      throw std::invalid_argument(
          "wordvec-avg encoder needs a word-vector table");
    }
    const int in_dim = word_vector_dim(word_vectors_);
    std::mt19937_64 rng(spec_.seed);
    weight_ = params_.add("proj.weight",
                          glorot_uniform({spec_.embed_dim, in_dim}, in_dim,
                                         spec_.embed_dim, rng));
  }

  Tensor encode(const TextInstance& input) const override {
    check_level(input.sequence, TextLevel::word, "wordvec-avg");
    const int dim = word_vector_dim(word_vectors_);
    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
    const int length = input.sequence.true_length;
    bool any_known = false;
    for (int t = 0; t < length; ++t) {
      const int id = input.sequence.ids[static_cast<std::size_t>(t)];
      auto it = word_vectors_.find(vocabulary_.word_of(id));
      if (it == word_vectors_.end()) continue;  // unknown words add zero
      any_known = true;
      for (int d = 0; d < dim; ++d) {
        mean[static_cast<std::size_t>(d)] +=
            it->second[static_cast<std::size_t>(d)];
      }
    }
    if (length > 0) {
      for (double& v : mean) v /= length;
    }
    if (!any_known) {
      std::cerr << "warning: no known words in caption; word-vector average "
                   "is zero\n";
    }
    return matvec(weight_, constant_vector(mean));
  }

 private:
  Vocabulary vocabulary_;
  WordVectorTable word_vectors_;
  Tensor weight_;
};

class AttributesEncoder final : public TextEncoder {
 public:
  AttributesEncoder(EncoderSpec spec, int attribute_dim)
      : TextEncoder(std::move(spec)), attribute_dim_(attribute_dim) {
    if (attribute_dim_ < 1) {
      throw std::invalid_argument(
          "attributes encoder needs a dataset with attribute vectors");
    }
    std::mt19937_64 rng(spec_.seed);
    weight_ = params_.add(
        "proj.weight", glorot_uniform({spec_.embed_dim, attribute_dim_},
                                      attribute_dim_, spec_.embed_dim, rng));
  }

  Tensor encode(const TextInstance& input) const override {
    if (static_cast<int>(input.attributes.size()) != attribute_dim_) {
      throw std::invalid_argument(
          "attributes encoder got " + std::to_string(input.attributes.size()) +
          " attributes, expected " + std::to_string(attribute_dim_));
    }
    return matvec(weight_, constant_vector(input.attributes));
  }

 private:
  int attribute_dim_;
  Tensor weight_;
};

class CnnEncoder final : public TextEncoder {
 public:
  CnnEncoder(EncoderSpec spec, const Vocabulary& vocabulary,
             const Alphabet& alphabet)
      : TextEncoder(std::move(spec)) {
    in_channels_ = spec_.level == TextLevel::character
                       ? alphabet.size() - 1
                       : vocabulary.size() - 1;
    std::mt19937_64 rng(spec_.seed);
    stack_ = std::make_unique<ConvStack>(spec_.effective_conv_blocks(),
                                         in_channels_,
                                         spec_.effective_max_len(), params_,
                                         rng);
    int prev = stack_->out_channels * stack_->out_len;
    for (std::size_t i = 0; i < spec_.fc_widths.size(); ++i) {
      const int width = spec_.fc_widths[i];
      if (width < 1) throw std::invalid_argument("fc width must be >= 1");
      const std::string prefix = "fc" + std::to_string(i);
      fc_weights_.push_back(params_.add(
          prefix + ".weight", glorot_uniform({width, prev}, prev, width, rng)));
      fc_biases_.push_back(
          params_.add(prefix + ".bias", Tensor::zeros({width}, true)));
      prev = width;
    }
    out_weight_ = params_.add(
        "out.weight",
        glorot_uniform({spec_.embed_dim, prev}, prev, spec_.embed_dim, rng));
    out_bias_ =
        params_.add("out.bias", Tensor::zeros({spec_.embed_dim}, true));
  }

  Tensor encode(const TextInstance& input) const override {
    check_level(input.sequence, spec_.level, "cnn");
    expect_fixed_length(input.sequence);
    Tensor h = flatten(stack_->apply(
        one_hot_sequence(input.sequence, in_channels_)));
    for (std::size_t i = 0; i < fc_weights_.size(); ++i) {
      h = relu(add(matvec(fc_weights_[i], h), fc_biases_[i]));
    }
    return add(matvec(out_weight_, h), out_bias_);
  }

 private:
  void expect_fixed_length(const TextSequence& seq) const {
    if (seq.max_len() != spec_.effective_max_len()) {
      throw std::invalid_argument(
          "cnn encoder built for length " +
          std::to_string(spec_.effective_max_len()) + " got sequence of " +
          std::to_string(seq.max_len()));
    }
  }

  int in_channels_ = 0;
  std::unique_ptr<ConvStack> stack_;
  std::vector<Tensor> fc_weights_;
  std::vector<Tensor> fc_biases_;
  Tensor out_weight_;
  Tensor out_bias_;
};

class LstmEncoder final : public TextEncoder {
 public:
  LstmEncoder(EncoderSpec spec, const Vocabulary& vocabulary,
              const Alphabet& alphabet)
      : TextEncoder(std::move(spec)) {
    table_size_ = spec_.level == TextLevel::character ? alphabet.size()
                                                      : vocabulary.size();
    if (spec_.hidden_dim < 1 || spec_.token_embed_dim < 1) {
      throw std::invalid_argument(
          "lstm encoder needs positive hidden_dim and token_embed_dim");
    }
    std::mt19937_64 rng(spec_.seed);
    embed_ = params_.add(
        "embed", glorot_uniform({table_size_, spec_.token_embed_dim},
                                table_size_, spec_.token_embed_dim, rng));
    cell_ = std::make_unique<LstmCell>(spec_.token_embed_dim, spec_.hidden_dim,
                                       "cell", params_, rng);
    if (spec_.hidden_dim != spec_.embed_dim) {
      proj_ = params_.add(
          "proj.weight", glorot_uniform({spec_.embed_dim, spec_.hidden_dim},
                                        spec_.hidden_dim, spec_.embed_dim,
                                        rng));
    }
  }

  Tensor encode(const TextInstance& input) const override {
    check_level(input.sequence, spec_.level, "lstm");
    const int length = input.sequence.true_length;
    if (length < 1) throw EmptyCaptionError("lstm encoder got empty sequence");
    Tensor h = Tensor::zeros({spec_.hidden_dim});
    Tensor c = Tensor::zeros({spec_.hidden_dim});
    std::vector<Tensor> hidden;
    hidden.reserve(static_cast<std::size_t>(length));
    // Recurrence stops at true_length, so padding can never leak in.
    for (int t = 0; t < length; ++t) {
      const int id = input.sequence.ids[static_cast<std::size_t>(t)];
      if (id < 0 || id >= table_size_) {
        throw std::invalid_argument("token id " + std::to_string(id) +
                                    " outside table of size " +
                                    std::to_string(table_size_));
      }
      const Tensor x = row(embed_, id);
      auto [h_next, c_next] = cell_->step(x, h, c);
      h = h_next;
      c = c_next;
      hidden.push_back(h);
    }
    const Tensor mean = temporal_mean(hidden);
    return proj_.defined() ? matvec(proj_, mean) : mean;
  }

 private:
  int table_size_ = 0;
  Tensor embed_;
  std::unique_ptr<LstmCell> cell_;
  Tensor proj_;
};

class CnnRnnEncoder final : public TextEncoder {
 public:
  CnnRnnEncoder(EncoderSpec spec, const Vocabulary& vocabulary,
                const Alphabet& alphabet)
      : TextEncoder(std::move(spec)) {
    in_channels_ = spec_.level == TextLevel::character
                       ? alphabet.size() - 1
                       : vocabulary.size() - 1;
    if (spec_.hidden_dim < 1) {
      throw std::invalid_argument("cnn-rnn encoder needs positive hidden_dim");
    }
    if (spec_.rnn_steps < 1) {
      throw std::invalid_argument("cnn-rnn encoder needs positive rnn_steps");
    }
    std::mt19937_64 rng(spec_.seed);
    stack_ = std::make_unique<ConvStack>(spec_.effective_conv_blocks(),
                                         in_channels_,
                                         spec_.effective_max_len(), params_,
                                         rng);
    if (stack_->out_len != spec_.rnn_steps) {
      throw std::invalid_argument(
          "cnn front-end reduces length " +
          std::to_string(spec_.effective_max_len()) + " to " +
          std::to_string(stack_->out_len) + " frames, expected rnn_steps = " +
          std::to_string(spec_.rnn_steps));
    }
    if (spec_.rnn_cell == RnnCell::vanilla) {
      vanilla_ = std::make_unique<VanillaCell>(stack_->out_channels,
                                               spec_.hidden_dim, "rnn",
                                               params_, rng);
    } else {
      lstm_ = std::make_unique<LstmCell>(stack_->out_channels,
                                         spec_.hidden_dim, "rnn", params_,
                                         rng);
    }
    if (spec_.hidden_dim != spec_.embed_dim) {
      proj_ = params_.add(
          "proj.weight", glorot_uniform({spec_.embed_dim, spec_.hidden_dim},
                                        spec_.hidden_dim, spec_.embed_dim,
                                        rng));
    }
  }

  Tensor encode(const TextInstance& input) const override {
    check_level(input.sequence, spec_.level, "cnn-rnn");
    if (input.sequence.max_len() != spec_.effective_max_len()) {
      throw std::invalid_argument(
          "cnn-rnn encoder built for length " +
          std::to_string(spec_.effective_max_len()) + " got sequence of " +
          std::to_string(input.sequence.max_len()));
    }
    const Tensor feature_map =
        stack_->apply(one_hot_sequence(input.sequence, in_channels_));
    Tensor h = Tensor::zeros({spec_.hidden_dim});
    Tensor c = Tensor::zeros({spec_.hidden_dim});
    std::vector<Tensor> hidden;
    hidden.reserve(static_cast<std::size_t>(spec_.rnn_steps));
    for (int t = 0; t < spec_.rnn_steps; ++t) {
      const Tensor x = column(feature_map, t);
      if (vanilla_) {
        h = vanilla_->step(x, h);
      } else {
        auto [h_next, c_next] = lstm_->step(x, h, c);
        h = h_next;
        c = c_next;
      }
      hidden.push_back(h);
    }
    const Tensor mean = temporal_mean(hidden);
    return proj_.defined() ? matvec(proj_, mean) : mean;
  }

 private:
  int in_channels_ = 0;
  std::unique_ptr<ConvStack> stack_;
  std::unique_ptr<VanillaCell> vanilla_;
  std::unique_ptr<LstmCell> lstm_;
  Tensor proj_;
};

}  // namespace

std::unique_ptr<TextEncoder> build_text_encoder(
    const EncoderSpec& spec, const Vocabulary& vocabulary,
    const Alphabet& alphabet, const WordVectorTable& word_vectors,
    int attribute_dim) {
  if (spec.embed_dim < 1) {
    throw std::invalid_argument("embed_dim must be >= 1");
  }
  switch (spec.family) {
    case EncoderFamily::bow:
      return std::make_unique<BowEncoder>(spec, vocabulary);
    case EncoderFamily::wordvec_avg:
      return std::make_unique<WordvecAvgEncoder>(spec, vocabulary,
                                                 word_vectors);
    case EncoderFamily::attributes:
      return std::make_unique<AttributesEncoder>(spec, attribute_dim);
    case EncoderFamily::cnn:
      return std::make_unique<CnnEncoder>(spec, vocabulary, alphabet);
    case EncoderFamily::lstm:
      return std::make_unique<LstmEncoder>(spec, vocabulary, alphabet);
    case EncoderFamily::cnn_rnn:
      return std::make_unique<CnnRnnEncoder>(spec, vocabulary, alphabet);
  }
  throw std::logic_error("unreachable encoder family");
}

ImageEncoder::ImageEncoder(ImageEncoderMode mode, int feature_dim,
                           int embed_dim, std::uint64_t seed)
    : mode_(mode), feature_dim_(feature_dim), embed_dim_(embed_dim) {
  if (feature_dim_ < 1 || embed_dim_ < 1) {
    throw std::invalid_argument("feature_dim and embed_dim must be >= 1");
  }
  if (mode_ == ImageEncoderMode::identity) {
    if (feature_dim_ != embed_dim_) {
      throw std::invalid_argument(
          "identity image encoder needs feature_dim == embed_dim, got " +
          std::to_string(feature_dim_) + " vs " + std::to_string(embed_dim_));
    }
  } else {
    std::mt19937_64 rng(seed);
    params_.add("proj.weight", glorot_uniform({embed_dim_, feature_dim_},
                                              feature_dim_, embed_dim_, rng));
  }
}

Tensor ImageEncoder::encode(const std::vector<double>& features) const {
  if (static_cast<int>(features.size()) != feature_dim_) {
    throw std::invalid_argument(
        "image encoder got " + std::to_string(features.size()) +
        " features, expected " + std::to_string(feature_dim_));
  }
  Tensor v = Tensor::from_values({feature_dim_}, features);
  if (mode_ == ImageEncoderMode::identity) return v;
  return matvec(*params_.find("proj.weight"), v);
}

}  // namespace sje
