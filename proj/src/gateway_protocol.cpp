#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "bcdrive/errors.hpp"
#include "bcdrive/gateway.hpp"

namespace bcdrive {

using nlohmann::json;

std::string to_string(DriveMode mode) {
  switch (mode) {
    case DriveMode::Manual: return "MANUAL";
    case DriveMode::Autonomous: return "AUTONOMOUS";
    case DriveMode::Expert: return "EXPERT";
  }
  return "MANUAL";
}

DriveMode parse_mode(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "MANUAL") return DriveMode::Manual;
  if (upper == "AUTONOMOUS") return DriveMode::Autonomous;
  if (upper == "EXPERT") return DriveMode::Expert;
  throw FormatError("unknown mode '" + text + "' (expected MANUAL, AUTONOMOUS or EXPERT)");
}

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

const char* control_kind_name(ControlKind k) {
  switch (k) {
    case ControlKind::Steer: return "STEER";
    case ControlKind::SetMode: return "SET_MODE";
    case ControlKind::SetRecording: return "SET_RECORDING";
    case ControlKind::Reset: return "RESET";
  }
  return "STEER";
}

json parse_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("message must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw FormatError("message lacks a \"kind\" tag");
  return j;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int d = 0;
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
      } else if (pad > 0 || (d = decode_char(c)) < 0) {
        throw FormatError("invalid base64 character");
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_telemetry(const TelemetryMessage& m) {
  json j;
  j["kind"] = "telemetry";
  j["step"] = m.step;
  j["frame"] = m.frame;
  j["pose"] = {{"x", m.x}, {"y", m.y}, {"heading", m.heading}};
  j["offset"] = m.offset;
  j["mode"] = to_string(m.mode);
  j["recording"] = m.recording;
  j["last_cmd"] = to_int(m.last_cmd);
  j["dataset_counts"] = {{"left", m.dataset_counts[0]},
                         {"straight", m.dataset_counts[1]},
                         {"right", m.dataset_counts[2]}};
  return j.dump();
}

TelemetryMessage decode_telemetry(const std::string& text) {
  const json j = parse_object(text);
  if (j["kind"] != "telemetry") throw FormatError("not a telemetry message");
  try {
    TelemetryMessage m;
    m.step = j.at("step").get<std::uint64_t>();
    m.frame = j.at("frame").get<std::string>();
    m.x = j.at("pose").at("x").get<double>();
    m.y = j.at("pose").at("y").get<double>();
    m.heading = j.at("pose").at("heading").get<double>();
    m.offset = j.at("offset").get<double>();
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.recording = j.at("recording").get<bool>();
    m.last_cmd = steer_from_int(j.at("last_cmd").get<int>());
    const json& c = j.at("dataset_counts");
    m.dataset_counts = {c.at("left").get<std::size_t>(), c.at("straight").get<std::size_t>(),
                        c.at("right").get<std::size_t>()};
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad telemetry message: ") + e.what());
  }
}

std::string encode_control(const ControlMessage& m) {
  json j;
  j["kind"] = control_kind_name(m.kind);
  if (m.steer) j["steer"] = to_int(*m.steer);
  if (m.mode) j["mode"] = to_string(*m.mode);
  if (m.recording) j["recording"] = *m.recording;
  return j.dump();
}

ControlMessage decode_control(const std::string& text) {
  const json j = parse_object(text);
  const std::string kind = j["kind"].get<std::string>();
  ControlMessage m;
  const char* field = nullptr;
  if (kind == "STEER") {
    m.kind = ControlKind::Steer;
    field = "steer";
  } else if (kind == "SET_MODE") {
    m.kind = ControlKind::SetMode;
    field = "mode";
  } else if (kind == "SET_RECORDING") {
    m.kind = ControlKind::SetRecording;
    field = "recording";
  } else if (kind == "RESET") {
    m.kind = ControlKind::Reset;
  } else {
    throw FormatError("unknown control kind '" + kind + "'");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && (field == nullptr || key != field)) {
      throw FormatError("field '" + key + "' is not allowed in " + kind);
    }
  }
  if (field != nullptr && !j.contains(field)) {
    throw FormatError(kind + " requires field '" + field + "'");
  }
  try {
    switch (m.kind) {
      case ControlKind::Steer: {
        const json& v = j.at("steer");
        if (!v.is_number_integer()) throw FormatError("steer must be -1, 0 or 1");
        const auto raw = v.get<long long>();
        if (raw < -1 || raw > 1) throw FormatError("steer must be -1, 0 or 1");
        m.steer = static_cast<SteerClass>(raw);
        break;
      }
      case ControlKind::SetMode:
        m.mode = parse_mode(j.at("mode").get<std::string>());
        break;
      case ControlKind::SetRecording:
        m.recording = j.at("recording").get<bool>();
        break;
      case ControlKind::Reset:
        break;
    }
  } catch (const json::exception& e) {
    throw FormatError(kind + ": " + e.what());
  }
  return m;
}

std::string encode_ack(const ControlAck& ack) {
  json j;
  j["kind"] = "ack";
  j["seq"] = ack.seq;
  j["ok"] = ack.ok;
  j["applied"] = ack.applied;
  j["tick"] = ack.tick;
  if (!ack.error.empty()) j["error"] = ack.error;
  return j.dump();
}

}  // namespace bcdrive
