#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <vector>

#include "twinforge/twin_graph.hpp"

namespace twinforge {

/// Append-only window of past twin graphs {G_{t-m} .. G_{t-1}}.
///
/// Snapshots are deep-copied on append and never mutated afterwards, so copies
/// of a store share them. Appends need external serialization; reads are safe
/// from any thread.
class HistoryStore {
 public:
  static constexpr std::size_t kDefaultCapacity = 64;

  explicit HistoryStore(std::size_t capacity = kDefaultCapacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }

  /// Appends a copy of `graph`; evicts the oldest snapshot once over capacity.
  /// Throws NonMonotoneTimestamp unless graph.timestamp is strictly newer.
  void append(const TwinGraph& graph);

  /// The k most recent snapshots, oldest first. Throws OutOfRange unless 1 <= k <= size().
  std::vector<TwinGraph> window(std::size_t k) const;

  const TwinGraph& latest() const;
  const TwinGraph& at(std::size_t i) const { return *snapshots_.at(i); }

 private:
  std::size_t capacity_;
  std::deque<std::shared_ptr<const TwinGraph>> snapshots_;
};

HistoryStore snapshot(HistoryStore store, const TwinGraph& graph);
std::vector<TwinGraph> window(const HistoryStore& store, std::size_t k);

}  // namespace twinforge
