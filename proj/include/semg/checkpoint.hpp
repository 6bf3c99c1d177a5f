#pragma once

#include "semg/model.hpp"
#include "semg/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace semg {

/// Model parameters plus, optionally, optimizer state and the next epoch to
/// run. Layout is described in docs/formats.md.
struct Checkpoint {
  Model model;
  std::optional<OptState> optimizer;
  int next_epoch = 0;
};

void write_checkpoint(std::ostream& out, const Model& model, const OptState* optimizer = nullptr,
                      int next_epoch = 0);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const OptState* optimizer = nullptr,
                     int next_epoch = 0);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace semg
