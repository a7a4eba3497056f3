#include "vidloc/wav.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "vidloc/error.hpp"
#include "vidloc/util.hpp"

namespace vidloc::wav {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}

std::uint16_t get_u16(std::string_view s, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                    (static_cast<unsigned char>(s[at + 1]) << 8));
}

[[noreturn]] void decode_error(const std::string& what) {
  throw Error(ErrorCode::AudioDecodeError, "wav: " + what);
}

}  // namespace

Millis Info::duration() const {
  if (sample_rate == 0) return Millis{0};
  return Millis{static_cast<std::int64_t>((frames * 1000 + sample_rate / 2) / sample_rate)};
}

void write_silence(const std::filesystem::path& path, Millis duration, std::uint32_t sample_rate) {
  const std::uint64_t frames =
      (static_cast<std::uint64_t>(duration.count()) * sample_rate + 500) / 1000;
  const std::uint16_t channels = 1;
  const std::uint16_t bits = 16;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * channels * (bits / 8));

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, channels);
  put_u32(out, sample_rate);
  put_u32(out, sample_rate * channels * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_bytes);
  out.append(data_bytes, '\0');
  write_file(path, out);
}

Info probe(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    decode_error("missing RIFF/WAVE header");
  }
  Info info;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.substr(pos, 4);
    const std::uint32_t size = get_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > bytes.size()) decode_error("truncated fmt chunk");
      if (get_u16(bytes, body) != 1) decode_error("not PCM");
      info.channels = get_u16(bytes, body + 2);
      info.sample_rate = get_u32(bytes, body + 4);
      info.bits_per_sample = get_u16(bytes, body + 14);
      if (info.channels == 0 || info.sample_rate == 0 || info.bits_per_sample % 8 != 0 ||
          info.bits_per_sample == 0) {
        decode_error("invalid fmt chunk");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) decode_error("data chunk before fmt chunk");
      const std::uint64_t available = std::min<std::uint64_t>(size, bytes.size() - body);
      if (available < size) decode_error("truncated data chunk");
      info.frames = size / (info.channels * (info.bits_per_sample / 8));
      return info;
    }
    pos = body + size + (size & 1);
  }
  decode_error("no data chunk");
}

Info probe_file(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    decode_error(e.what());
  }
  return probe(bytes);
}

}  // namespace vidloc::wav
