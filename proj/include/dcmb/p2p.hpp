#pragma once

#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dcmb/bytes.hpp"
#include "dcmb/types.hpp"

namespace dcmb {

enum class ChannelState { Available, Partitioned };

/// Exit conditions of the outage cache: delivered once the channel is back,
/// rejected when the cache is full, dropped when the timeout expires.
struct CachePolicy {
  std::size_t capacity = 100;
  Tick timeout = 24;

  void validate() const;
};

struct P2PMessage {
  std::uint64_t msg_id = 0;
  Bytes payload;
  Tick enqueued_at = 0;
  std::string topic = "data";
};

enum class SendOutcome { Delivered, Cached, DroppedFull, DroppedTimeout };

std::string_view to_string(SendOutcome o);
std::string_view to_string(ChannelState s);

struct ChannelEvent {
  Tick tick = 0;
  std::uint64_t msg_id = 0;
  SendOutcome kind = SendOutcome::Delivered;
  std::string topic;
};

struct ChannelStats {
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::size_t dropped_full = 0;
  std::size_t dropped_timeout = 0;
  std::size_t cached = 0;
};

/// Simulated secure point-to-point channel with an outage cache. Delivery is
/// FIFO per channel and takes zero ticks when the channel is available.
class Channel {
 public:
  Channel(ParticipantId from, ParticipantId to, CachePolicy policy);

  const ParticipantId& from() const noexcept { return from_; }
  const ParticipantId& to() const noexcept { return to_; }
  ChannelState state() const noexcept { return state_; }
  const CachePolicy& policy() const noexcept { return policy_; }

  std::uint64_t next_message_id() const noexcept { return next_id_; }

  /// Throws Error(DuplicateMessage) if msg_id was already used on this channel.
  SendOutcome send(P2PMessage msg, Tick now);

  /// Drops cached messages older than the timeout (now - enqueued_at > timeout),
  /// then delivers the rest in order if the channel is available.
  std::vector<ChannelEvent> tick(Tick now);

  void set_availability(ChannelState state) noexcept { state_ = state; }

  const std::vector<P2PMessage>& delivery_log() const noexcept { return delivered_; }
  const std::deque<P2PMessage>& cache() const noexcept { return cache_; }
  /// Every delivery and every drop, in order.
  const std::vector<ChannelEvent>& events() const noexcept { return events_; }
  ChannelStats stats() const;

 private:
  void record(Tick now, const P2PMessage& m, SendOutcome kind, std::vector<ChannelEvent>* out);
  void expire(Tick now, std::vector<ChannelEvent>* out);
  void flush(Tick now, std::vector<ChannelEvent>* out);

  ParticipantId from_;
  ParticipantId to_;
  CachePolicy policy_;
  ChannelState state_ = ChannelState::Available;
  std::deque<P2PMessage> cache_;
  std::vector<P2PMessage> delivered_;
  std::vector<ChannelEvent> events_;
  std::set<std::uint64_t> used_ids_;
  std::uint64_t next_id_ = 0;
  std::size_t sent_ = 0;
};

/// Directed channels keyed by (from, to).
class Network {
 public:
  Channel& add_channel(const ParticipantId& from, const ParticipantId& to, CachePolicy policy);
  bool has_channel(const ParticipantId& from, const ParticipantId& to) const;

  /// Throws Error(UnknownChannel).
  Channel& channel(const ParticipantId& from, const ParticipantId& to);
  const Channel& channel(const ParticipantId& from, const ParticipantId& to) const;

  /// Assigns the next channel-local msg_id.
  SendOutcome send(const ParticipantId& from, const ParticipantId& to, Bytes payload, Tick now,
                   std::string topic = "data");

  std::vector<ChannelEvent> tick(Tick now);

  std::map<std::pair<ParticipantId, ParticipantId>, Channel>& channels() noexcept { return channels_; }
  const std::map<std::pair<ParticipantId, ParticipantId>, Channel>& channels() const noexcept { return channels_; }

 private:
  std::map<std::pair<ParticipantId, ParticipantId>, Channel> channels_;
};

}  // namespace dcmb
