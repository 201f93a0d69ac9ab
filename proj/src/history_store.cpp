#include "twinforge/history_store.hpp"

#include <string>

#include "twinforge/error.hpp"

namespace twinforge {

HistoryStore::HistoryStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::OutOfRange, "history capacity must be >= 1");
}

void HistoryStore::append(const TwinGraph& graph) {
  if (graph.timestamp < 0) throw Error(ErrorCode::NonMonotoneTimestamp, "negative timestamp");
  if (!snapshots_.empty() && graph.timestamp <= snapshots_.back()->timestamp)
    throw Error(ErrorCode::NonMonotoneTimestamp,
                std::to_string(graph.timestamp) + " <= " + std::to_string(snapshots_.back()->timestamp));
  snapshots_.push_back(std::make_shared<const TwinGraph>(graph));
  while (snapshots_.size() > capacity_) snapshots_.pop_front();
}

std::vector<TwinGraph> HistoryStore::window(std::size_t k) const {
  if (k == 0 || k > snapshots_.size())
    throw Error(ErrorCode::OutOfRange, "window " + std::to_string(k) + " of " + std::to_string(snapshots_.size()));
  std::vector<TwinGraph> out;
  out.reserve(k);
  for (auto it = snapshots_.end() - static_cast<std::ptrdiff_t>(k); it != snapshots_.end(); ++it) out.push_back(**it);
  return out;
}

const TwinGraph& HistoryStore::latest() const {
  if (snapshots_.empty()) throw Error(ErrorCode::OutOfRange, "history is empty");
  return *snapshots_.back();
}

HistoryStore snapshot(HistoryStore store, const TwinGraph& graph) {
  store.append(graph);
  return store;
}

std::vector<TwinGraph> window(const HistoryStore& store, std::size_t k) { return store.window(k); }

}  // namespace twinforge
