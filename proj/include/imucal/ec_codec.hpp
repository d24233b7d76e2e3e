/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace imucal {

/// Raw gyro payload on the wire: 6 bytes (three little-endian int16 axes on
/// the real device; the codec treats them as opaque).
using EcPayload = std::array<std::uint8_t, 6>;

inline EcPayload xor_payload(const EcPayload& a, const EcPayload& b) {
  EcPayload out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

struct EcPacket {
  std::int64_t packet_index = 0;
  EcPayload payload{};
  EcPayload parity{};  // XOR of the previous `window` payloads

  bool operator==(const EcPacket&) const = default;
};

/// Sliding-window XOR encoder. Parity for packet i covers payloads
/// i-1 .. i-window, with pre-stream payloads treated as zero. Once the ring
/// is full each packet costs exactly two XORs.
class EcEncoder {
 public:
  explicit EcEncoder(int window);

  EcPacket encode_next(const EcPayload& payload);

  int window() const { return window_; }
  std::int64_t next_index() const { return next_index_; }
  const EcPayload& running_xor() const { return running_; }

 private:
  int window_;
  std::vector<EcPayload> ring_;
  int head_ = 0;
  int count_ = 0;
  EcPayload running_{};
  std::int64_t next_index_ = 0;
};

struct DecodeResult {
  std::map<std::int64_t, EcPayload> payloads;   // everything known after recovery
  std::vector<std::int64_t> unrecovered;        // ascending
};

/// Reconstruct lost payloads from the received packets' parities, iterating
/// to a fixpoint. Indices are assumed to start at 0 (the encoder convention),
/// so the universe of packets is [0, max received index]. Throws
/// inconsistent_parity if a fully known window contradicts its parity.
DecodeResult decode_stream(std::span<const EcPacket> received, int window);

struct LossModel {
  enum class Kind { iid, burst };
  Kind kind = Kind::iid;
  double p = 0.0;      // per-packet drop (iid) or burst-start probability
  int burst_len = 1;   // packets dropped per burst
};

/// Drop whole packets per the loss model; deterministic for a fixed seed.
std::vector<EcPacket> channel_simulate(std::span<const EcPacket> stream, const LossModel& model,
                                       std::uint64_t seed);

}  // namespace imucal
