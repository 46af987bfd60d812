#pragma once

#include "zerosing/corpus.hpp"

namespace zs::testing {

/// Full mel/timbre dimensions with a tiny network, for fast training tests.
inline ModelConfig tiny_model() {
  ModelConfig c;
  c.channels = 8;
  c.n_blocks = 2;
  c.step_in = 16;
  c.step_mid = 16;
  c.step_out = 16;
  c.style_dim = 4;
  c.phone_embed = 8;
  c.encoder_hidden = 8;
  c.diffusion_steps = 50;
  return c;
}

/// Two speakers, one sung and one spoken utterance each.
inline const Corpus& small_corpus() {
  static const Corpus corpus = [] {
    SyntheticCorpusSpec spec;
    spec.n_speakers = 2;
    spec.n_utterances = 2;
    spec.min_notes = 3;
    spec.max_notes = 4;
    spec.seed = 5;
    return generate_corpus(spec);
  }();
  return corpus;
}

inline TrainConfig quick_train(ModelVariant variant, int iterations) {
  TrainConfig t;
  t.variant = variant;
  t.mix = variant != ModelVariant::SvcC;
  t.iterations = iterations;
  t.batch_size = 2;
  t.crop_frames = 32;
  t.log_every = 2;
  t.checkpoint_every = 0;
  t.seed = 3;
  return t;
}

}  // namespace zs::testing
