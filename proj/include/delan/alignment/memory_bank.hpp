#pragma once

#include <cstddef>
#include <deque>
#include <span>

#include "delan/alignment/embeddings.hpp"

namespace delan::alignment {

enum class BankLevel { instruction_history, landmark_observation };

/// FIFO of detached instance embeddings used as extra contrastive
/// negatives. Entries are value copies and never receive gradients.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity = 480, BankLevel level = BankLevel::instruction_history)
      : capacity_(capacity), level_(level) {}

  /// Appends copies of `items`, evicting oldest entries past capacity.
  void push(std::span<const InstanceEmbeddings> items);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  BankLevel level() const { return level_; }
  bool empty() const { return entries_.empty(); }

  /// Oldest first.
  const InstanceEmbeddings& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  BankLevel level_;
  std::deque<InstanceEmbeddings> entries_;
};

/// Value-returning form of MemoryBank::push.
MemoryBank bank_push(MemoryBank bank, std::span<const InstanceEmbeddings> items);

}  // namespace delan::alignment
