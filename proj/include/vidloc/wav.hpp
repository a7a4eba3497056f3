#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "vidloc/text.hpp"

namespace vidloc::wav {

inline constexpr std::uint32_t kSampleRate = 24000;

struct Info {
  std::uint32_t sample_rate = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint64_t frames = 0;

  // Rounded to the nearest millisecond.
  Millis duration() const;
};

// Mono 16-bit PCM silence, frame count rounded from `duration`.
void write_silence(const std::filesystem::path& path, Millis duration,
                   std::uint32_t sample_rate = kSampleRate);

// Throws Error(AudioDecodeError) for anything that is not a readable PCM WAV.
Info probe(std::string_view bytes);
Info probe_file(const std::filesystem::path& path);

}  // namespace vidloc::wav
