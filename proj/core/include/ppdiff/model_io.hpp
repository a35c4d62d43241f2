#pragma once

#include <memory>
#include <string>

#include "ppdiff/denoiser.hpp"
#include "ppdiff/schedule.hpp"

namespace ppdiff {

struct ModelBundle {
  DomainPtr domain;
  DiffusionSchedule schedule;
  std::unique_ptr<NeuralDenoiser> model;
};

// Single-file JSON bundle (format tag "ppdiff-model-v1") holding the domain,
// the diffusion schedule, the network hyperparameters and all parameter
// tensors. Doubles use shortest round-trip serialization, so save/load is
// bitwise exact.
void save_model(const std::string& path, const NeuralDenoiser& model,
                const DiffusionSchedule& schedule, const DomainPtr& domain);

ModelBundle load_model(const std::string& path);

}  // namespace ppdiff
