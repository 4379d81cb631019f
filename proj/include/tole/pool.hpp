#pragma once

#include <cstddef>
#include <limits>
#include <mutex>
#include <optional>
#include <vector>

#include "tole/core.hpp"

namespace tole {

struct PoolEntry {
  std::vector<TokenId> context;  // y<=t, prefix included
  TokenId action = 0;            // y_{t+1}
  double raw_reward = 0;
  std::optional<double> shaped_reward;
  int lifetime = 0;  // episodes the entry may still be trained on
  long born_episode = 0;
};

/// Replay pool whose entries expire after a fixed number of training
/// episodes. push() is safe to call from several rollout threads; tick()
/// and the accessors need exclusive access.
class DataPool {
 public:
  static constexpr int kUnbounded = std::numeric_limits<int>::max();

  explicit DataPool(int lifetime = 3);

  void push(std::vector<TokenId> context, TokenId action, double raw_reward);

  /// End of episode: decrement lifetimes, drop entries that reach zero,
  /// clear shaped rewards. Returns the number evicted.
  std::size_t tick();

  std::vector<double> snapshot_rewards() const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int lifetime_init() const { return lifetime_; }
  long episode() const { return episode_; }

  const std::vector<PoolEntry>& entries() const { return entries_; }
  std::vector<PoolEntry>& entries() { return entries_; }

 private:
  int lifetime_;
  long episode_ = 0;
  std::vector<PoolEntry> entries_;
  std::mutex push_mutex_;
};

}  // namespace tole
