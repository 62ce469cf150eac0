#include "pipeline/generate.hpp"

#include <algorithm>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace schedsyn::pipeline {

using tensor::Tensor;

core::ScheduleSample generate(vae::VaeModel& model, uint64_t count, uint64_t seed) {
  if (count < 1) throw DataError("generate: count must be >= 1");
  core::ScheduleSample sample;
  sample.kind = core::SampleKind::Synthetic;
  sample.seed = seed;
  sample.source = "generated";
  sample.schedules.reserve(count);

  const int latent = model.config().latent_size;
  constexpr uint64_t kBatch = 1024;
  for (uint64_t from = 0; from < count; from += kBatch) {
    const uint64_t to = std::min(from + kBatch, count);
    Tensor z({static_cast<int>(to - from), latent});
    for (uint64_t i = from; i < to; ++i) {
      for (int d = 0; d < latent; ++d) {
        z.data[(i - from) * static_cast<uint64_t>(latent) + static_cast<uint64_t>(d)] =
            static_cast<float>(
                rng::normal(rng::key(seed, rng::Stream::Latent, i, static_cast<uint64_t>(d))));
      }
    }
    model.decode_latent(z, sample.schedules, sample.degenerate_count);
  }
  return sample;
}

}  // namespace schedsyn::pipeline
