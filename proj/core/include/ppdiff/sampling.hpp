#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ppdiff/denoiser.hpp"
#include "ppdiff/mask.hpp"
#include "ppdiff/point_set.hpp"
#include "ppdiff/schedule.hpp"

namespace ppdiff {

// Reverse-chain generation. Every sample makes exactly schedule.steps()
// denoiser evaluations. Randomness is drawn from streams derived per
// (seed, task, step), so a given (seed, task) pair is replayable and batch
// results never depend on the worker count.

PointSet sample_unconditional(const Denoiser& model, const DiffusionSchedule& schedule,
                              const DomainPtr& domain, std::uint64_t seed, std::uint64_t task = 0);

// Mask-conditional generation: the mask region is pinned to `known` (all its
// points must satisfy mask(x)=1, else MaskError) and only points outside the
// mask are generated and returned.
PointSet sample_conditional(const Denoiser& model, const DiffusionSchedule& schedule,
                            const PointSet& known, const Mask& mask, std::uint64_t seed,
                            std::uint64_t task = 0);

struct SampleTask {
  const PointSet* known = nullptr;  // conditional iff mask != nullptr
  const Mask* mask = nullptr;
};

std::vector<PointSet> sample_batch(const Denoiser& model, const DiffusionSchedule& schedule,
                                   const DomainPtr& domain, const std::vector<SampleTask>& tasks,
                                   std::uint64_t seed, int workers = 1);

// Convenience: `num` unconditional samples as tasks 0..num-1.
std::vector<PointSet> sample_many(const Denoiser& model, const DiffusionSchedule& schedule,
                                  const DomainPtr& domain, int num, std::uint64_t seed,
                                  int workers = 1);

}  // namespace ppdiff
