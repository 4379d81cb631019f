#include "tole/pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace tole {

DataPool::DataPool(int lifetime) : lifetime_(lifetime) {
  if (lifetime_ < 1) throw std::invalid_argument("pool lifetime must be at least 1");
}

void DataPool::push(std::vector<TokenId> context, TokenId action, double raw_reward) {
  std::lock_guard lock(push_mutex_);
  entries_.push_back(PoolEntry{std::move(context), action, raw_reward, std::nullopt, lifetime_, episode_});
}

std::size_t DataPool::tick() {
  if (lifetime_ != kUnbounded) {
    for (auto& e : entries_) --e.lifetime;
  }
  for (auto& e : entries_) e.shaped_reward.reset();
  auto dead = std::remove_if(entries_.begin(), entries_.end(),
                             [](const PoolEntry& e) { return e.lifetime <= 0; });
  std::size_t evicted = static_cast<std::size_t>(entries_.end() - dead);
  entries_.erase(dead, entries_.end());
  ++episode_;
  return evicted;
}

std::vector<double> DataPool::snapshot_rewards() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.raw_reward);
  return out;
}

}  // namespace tole
