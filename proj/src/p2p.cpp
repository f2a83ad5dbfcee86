#include "dcmb/p2p.hpp"

#include "dcmb/errors.hpp"

namespace dcmb {

void CachePolicy::validate() const {
  if (capacity < 1) throw Error(ErrorCode::ConfigInvalid, "cache capacity must be at least 1");
  if (timeout < 1) throw Error(ErrorCode::ConfigInvalid, "cache timeout must be at least 1 tick");
}

std::string_view to_string(SendOutcome o) {
  switch (o) {
    case SendOutcome::Delivered: return "delivered";
    case SendOutcome::Cached: return "cached";
    case SendOutcome::DroppedFull: return "dropped_full";
    case SendOutcome::DroppedTimeout: return "dropped_timeout";
  }
  return "unknown";
}

std::string_view to_string(ChannelState s) {
  return s == ChannelState::Available ? "available" : "partitioned";
}

Channel::Channel(ParticipantId from, ParticipantId to, CachePolicy policy)
    : from_(std::move(from)), to_(std::move(to)), policy_(policy) {
  policy_.validate();
}

void Channel::record(Tick now, const P2PMessage& m, SendOutcome kind, std::vector<ChannelEvent>* out) {
  ChannelEvent ev{now, m.msg_id, kind, m.topic};
  if (kind != SendOutcome::Cached) events_.push_back(ev);
  if (out) out->push_back(std::move(ev));
}

void Channel::expire(Tick now, std::vector<ChannelEvent>* out) {
  // cache is ordered by enqueue time, so expired messages form a prefix
  while (!cache_.empty() && now > cache_.front().enqueued_at && now - cache_.front().enqueued_at > policy_.timeout) {
    record(now, cache_.front(), SendOutcome::DroppedTimeout, out);
    cache_.pop_front();
  }
}

void Channel::flush(Tick now, std::vector<ChannelEvent>* out) {
  while (!cache_.empty()) {
    record(now, cache_.front(), SendOutcome::Delivered, out);
    delivered_.push_back(std::move(cache_.front()));
    cache_.pop_front();
  }
}

SendOutcome Channel::send(P2PMessage msg, Tick now) {
  if (!used_ids_.insert(msg.msg_id).second)
    throw Error(ErrorCode::DuplicateMessage,
                "msg_id " + std::to_string(msg.msg_id) + " reused on channel " + from_ + "->" + to_);
  next_id_ = std::max(next_id_, msg.msg_id + 1);
  ++sent_;
  msg.enqueued_at = now;

  if (state_ == ChannelState::Available) {
    // anything still cached from an outage goes first
    expire(now, nullptr);
    flush(now, nullptr);
    record(now, msg, SendOutcome::Delivered, nullptr);
    delivered_.push_back(std::move(msg));
    return SendOutcome::Delivered;
  }
  if (cache_.size() >= policy_.capacity) {
    record(now, msg, SendOutcome::DroppedFull, nullptr);
    return SendOutcome::DroppedFull;
  }
  cache_.push_back(std::move(msg));
  return SendOutcome::Cached;
}

std::vector<ChannelEvent> Channel::tick(Tick now) {
  std::vector<ChannelEvent> out;
  expire(now, &out);
  if (state_ == ChannelState::Available) flush(now, &out);
  return out;
}

ChannelStats Channel::stats() const {
  ChannelStats s;
  s.sent = sent_;
  s.cached = cache_.size();
  for (const auto& e : events_) {
    switch (e.kind) {
      case SendOutcome::Delivered: ++s.delivered; break;
      case SendOutcome::DroppedFull: ++s.dropped_full; break;
      case SendOutcome::DroppedTimeout: ++s.dropped_timeout; break;
      case SendOutcome::Cached: break;
    }
  }
  return s;
}

Channel& Network::add_channel(const ParticipantId& from, const ParticipantId& to, CachePolicy policy) {
  auto key = std::make_pair(from, to);
  if (channels_.contains(key)) throw Error(ErrorCode::ConfigInvalid, "duplicate channel " + from + "->" + to);
  return channels_.emplace(key, Channel(from, to, policy)).first->second;
}

bool Network::has_channel(const ParticipantId& from, const ParticipantId& to) const {
  return channels_.contains({from, to});
}

Channel& Network::channel(const ParticipantId& from, const ParticipantId& to) {
  auto it = channels_.find({from, to});
  if (it == channels_.end()) throw Error(ErrorCode::UnknownChannel, from + "->" + to);
  return it->second;
}

const Channel& Network::channel(const ParticipantId& from, const ParticipantId& to) const {
  auto it = channels_.find({from, to});
  if (it == channels_.end()) throw Error(ErrorCode::UnknownChannel, from + "->" + to);
  return it->second;
}

SendOutcome Network::send(const ParticipantId& from, const ParticipantId& to, Bytes payload, Tick now,
                          std::string topic) {
  Channel& ch = channel(from, to);
  return ch.send(P2PMessage{ch.next_message_id(), std::move(payload), now, std::move(topic)}, now);
}

std::vector<ChannelEvent> Network::tick(Tick now) {
  std::vector<ChannelEvent> all;
  for (auto& [key, ch] : channels_) {
    auto evs = ch.tick(now);
    all.insert(all.end(), evs.begin(), evs.end());
  }
  return all;
}

}  // namespace dcmb
