#pragma once

// Checkpoint file layout:
//
//   line 1   "eraselab-checkpoint 1"
//   line 2   "header <N>"            byte length of the JSON header
//   N bytes  JSON header: arch, schedule (T, beta_start, beta_end), layer
//            shapes, parameter_count, payload_fnv1a64, seed, config echo
//   "\n"
//   payload  parameter_count little-endian IEEE-754 doubles, layer order
//
// Loading re-derives the schedule from its three defining numbers and checks
// the payload checksum, so a round trip reproduces the model bit for bit.

#include <cstdint>
#include <string>

#include "json.hpp"

#include "eraselab/diffusion/denoiser.hpp"

namespace eraselab::diffusion {

struct Checkpoint {
  DenoiserModel model;
  std::uint64_t seed = 0;
  nlohmann::json config;  // free-form echo of the producing configuration
};

std::string encode_checkpoint(const DenoiserModel& model, std::uint64_t seed, const nlohmann::json& config);
// Throws Error(Format) naming the byte offset of the first problem.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const DenoiserModel& model, std::uint64_t seed,
                     const nlohmann::json& config = nlohmann::json::object());
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace eraselab::diffusion
