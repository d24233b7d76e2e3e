/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/ec_codec.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <string>
#include <unordered_map>

#include "imucal/error.hpp"

namespace imucal {

EcEncoder::EcEncoder(int window) : window_(window) {
  if (window < 1 || window > 16)
    raise(Errc::bad_config, "erasure-code window must be in [1, 16], got " +
                                std::to_string(window));
  ring_.assign(static_cast<std::size_t>(window), EcPayload{});
}

EcPacket EcEncoder::encode_next(const EcPayload& payload) {
  EcPacket pkt{next_index_++, payload, running_};
  if (count_ >= window_) {
    running_ = xor_payload(running_, ring_[static_cast<std::size_t>(head_)]);
  } else {
    ++count_;
  }
  running_ = xor_payload(running_, payload);
  ring_[static_cast<std::size_t>(head_)] = payload;
  head_ = (head_ + 1) % window_;
  return pkt;
}

namespace {

struct Equation {
  std::int64_t rhs_index;          // the received packet whose parity this is
  EcPayload acc;                   // parity XOR all already-known terms
  std::vector<std::int64_t> open;  // still-unknown term indices
};

}  // namespace

DecodeResult decode_stream(std::span<const EcPacket> received, int window) {
  if (window < 1 || window > 16)
    raise(Errc::bad_config, "erasure-code window must be in [1, 16]");

  DecodeResult out;
  if (received.empty()) return out;

  std::unordered_map<std::int64_t, EcPayload> known;
  std::int64_t max_index = 0;
  for (const EcPacket& pkt : received) {
    known.emplace(pkt.packet_index, pkt.payload);
    max_index = std::max(max_index, pkt.packet_index);
  }

  std::vector<Equation> equations;
  equations.reserve(received.size());
  std::unordered_map<std::int64_t, std::vector<std::size_t>> index_to_eqs;
  std::deque<std::size_t> ready;

  for (const EcPacket& pkt : received) {
    Equation eq;
    eq.rhs_index = pkt.packet_index;
    eq.acc = pkt.parity;
    const std::int64_t lo = std::max<std::int64_t>(0, pkt.packet_index - window);
    for (std::int64_t i = lo; i < pkt.packet_index; ++i) {
      auto it = known.find(i);
      if (it != known.end())
        eq.acc = xor_payload(eq.acc, it->second);
      else
        eq.open.push_back(i);
    }
    const std::size_t id = equations.size();
    if (eq.open.empty()) {
      if (eq.acc != EcPayload{})
        raise(Errc::inconsistent_parity,
              "parity of packet " + std::to_string(pkt.packet_index) +
                  " contradicts its fully known window");
      continue;
    }
    if (eq.open.size() == 1) ready.push_back(id);
    for (std::int64_t i : eq.open) index_to_eqs[i].push_back(id);
    equations.push_back(std::move(eq));
  }

  // Each solvable equation pins exactly one payload; solving it may make
  // other equations solvable, so run to fixpoint. XOR is associative and
  // commutative, hence the result does not depend on the order here.
  while (!ready.empty()) {
    const std::size_t id = ready.front();
    ready.pop_front();
    Equation& eq = equations[id];
    if (eq.open.size() != 1) continue;  // already drained via another equation
    const std::int64_t idx = eq.open.front();
    const EcPayload value = eq.acc;
    eq.open.clear();
    if (auto [it, inserted] = known.emplace(idx, value); !inserted) {
      (void)it;
      continue;
    }
    for (std::size_t other_id : index_to_eqs[idx]) {
      if (other_id == id) continue;
      Equation& other = equations[other_id];
      auto pos = std::find(other.open.begin(), other.open.end(), idx);
      if (pos == other.open.end()) continue;
      other.open.erase(pos);
      other.acc = xor_payload(other.acc, value);
      if (other.open.size() == 1) {
        ready.push_back(other_id);
      } else if (other.open.empty() && other.acc != EcPayload{}) {
        raise(Errc::inconsistent_parity,
              "parity of packet " + std::to_string(other.rhs_index) +
                  " contradicts recovered payloads");
      }
    }
  }

  for (std::int64_t i = 0; i <= max_index; ++i) {
    auto it = known.find(i);
    if (it != known.end())
      out.payloads.emplace(i, it->second);
    else
      out.unrecovered.push_back(i);
  }
  return out;
}

std::vector<EcPacket> channel_simulate(std::span<const EcPacket> stream, const LossModel& model,
                                       std::uint64_t seed) {
  if (model.p < 0.0 || model.p >= 1.0)
    raise(Errc::bad_config, "loss probability must be in [0, 1)");
  if (model.kind == LossModel::Kind::burst && model.burst_len < 1)
    raise(Errc::bad_config, "burst length must be at least 1");

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(model.p);

  std::vector<EcPacket> received;
  received.reserve(stream.size());
  int burst_left = 0;
  for (const EcPacket& pkt : stream) {
    bool lost;
    if (model.kind == LossModel::Kind::iid) {
      lost = model.p > 0.0 && drop(rng);
    } else {
      if (burst_left == 0 && model.p > 0.0 && drop(rng)) burst_left = model.burst_len;
      lost = burst_left > 0;
      if (burst_left > 0) --burst_left;
    }
    if (!lost) received.push_back(pkt);
  }
  return received;
}

}  // namespace imucal
