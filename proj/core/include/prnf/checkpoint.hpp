#pragma once

#include "prnf/flow.hpp"
#include "prnf/training.hpp"

#include <cstdint>
#include <string>

namespace prnf {

// A trained model plus the settings that produced it. The text form is
// line-oriented UTF-8 with sections [meta], [norm], [theta_h], [theta_g] and
// a trailing [checksum]; every number is printed with 17 significant digits,
// so save -> load -> save is byte-identical.
struct Checkpoint {
    int format_version = 1;
    PrNfModel model;
    TrainConfig train;          // echo of the run that produced the model
    std::uint64_t data_seed = 0;
};

std::string checkpoint_text(const Checkpoint& c);

// Verifies the trailing checksum over the preceding bytes (ChecksumError on
// mismatch, IoError on malformed text), then parses.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a, 64-bit: the rolling hash behind [checksum].
std::uint64_t fnv1a64(const char* bytes, std::size_t n);

} // namespace prnf
