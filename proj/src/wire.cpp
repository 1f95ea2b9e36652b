#include "canteen/wire.hpp"

#include <cstdint>

#include "canteen/session_service.hpp"

namespace canteen {

namespace {

std::uint32_t read_length(std::string_view b) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(b[0])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[3]));
}

}  // namespace

std::string encode_frame(const nlohmann::json& message) {
  const std::string payload = message.dump();
  if (payload.size() > kMaxFrameBytes) {
    throw ProtocolError(ErrorCode::kInvalidMessage, "frame too large");
  }
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16));
  out.push_back(static_cast<char>(n >> 8));
  out.push_back(static_cast<char>(n));
  out += payload;
  return out;
}

void FrameDecoder::feed(std::string_view bytes) {
  buffer_.append(bytes);
  if (buffer_.size() >= 4 && read_length(buffer_) > kMaxFrameBytes) {
    throw ProtocolError(ErrorCode::kInvalidMessage, "frame too large");
  }
}

std::optional<nlohmann::json> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const std::size_t n = read_length(buffer_);
  if (buffer_.size() < 4 + n) return std::nullopt;
  const std::string payload = buffer_.substr(4, n);
  buffer_.erase(0, 4 + n);
  auto parsed = nlohmann::json::parse(payload, nullptr, false);
  if (parsed.is_discarded()) {
    throw ProtocolError(ErrorCode::kInvalidMessage, "frame is not valid JSON");
  }
  return parsed;
}

}  // namespace canteen
