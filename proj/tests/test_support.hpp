#pragma once

#include <vector>

#include "tutorqa/evaluator.hpp"
#include "tutorqa/nn/model.hpp"
#include "tutorqa/synth.hpp"

namespace tutorqa::test {

// Miniature model dimensions: fast enough for exhaustive gradient checks.
inline nn::ModelConfig mini_config(nn::Variant variant, int w = 1) {
  nn::ModelConfig cfg;
  cfg.variant = variant;
  cfg.window = w;
  cfg.embed_dim = 6;
  cfg.filter_widths = {2, 3};
  cfg.maps_per_width = 3;
  cfg.answer_dim = 6;
  cfg.gru_hidden = 4;
  cfg.attn_hidden = 5;
  cfg.dropout = 0.0;
  return cfg;
}

// Small-but-trainable dimensions for overfit and trend checks.
inline nn::ModelConfig small_config(nn::Variant variant, int w = 2) {
  nn::ModelConfig cfg;
  cfg.variant = variant;
  cfg.window = w;
  cfg.embed_dim = 24;
  cfg.filter_widths = {2, 3};
  cfg.maps_per_width = 12;
  cfg.answer_dim = 24;
  cfg.gru_hidden = 24;
  cfg.attn_hidden = 24;
  cfg.dropout = 0.2;
  return cfg;
}

struct SynthFixture {
  SynthData data;
  AnswerPool pool;
  Vocabulary vocab;

  explicit SynthFixture(const SynthSpec& spec)
      : data(synth_dataset(spec)),
        pool(answer_pool(data.kb)),
        vocab(Vocabulary::build(data.dataset, 1)) {}

  ExampleSet examples(int w, ContextMask mask = {}) const {
    return make_examples(data.dataset, pool, w, CueSource::gold, nullptr, mask);
  }
};

}  // namespace tutorqa::test
