#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace canteen {

// Frames on the persistent connection: a 4-byte big-endian payload length
// followed by that many bytes of UTF-8 JSON.
inline constexpr std::size_t kMaxFrameBytes = 1u << 20;

std::string encode_frame(const nlohmann::json& message);

// Incremental decoder; bytes may arrive split at any boundary.
class FrameDecoder {
 public:
  // Throws ProtocolError(kInvalidMessage) on an oversized frame.
  void feed(std::string_view bytes);
  // Next complete frame, or empty. Throws ProtocolError on malformed JSON.
  std::optional<nlohmann::json> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

}  // namespace canteen
