#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace delan::world {

/// Closed instruction vocabulary. Landmark nouns occupy a contiguous id
/// range and are indexed by landmark class.
class Vocabulary {
 public:
  static const Vocabulary& standard();

  std::size_t size() const { return words_.size(); }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  /// Throws std::out_of_range for unknown words.
  int id(std::string_view word) const;

  int pad() const { return 0; }
  int cls() const { return 1; }

  std::size_t landmark_classes() const { return landmark_count_; }
  int noun_of_class(int cls) const;
  /// Class of a noun id, -1 if the id is not a landmark noun.
  int class_of_noun(int id) const;
  bool is_landmark(int id) const { return class_of_noun(id) >= 0; }
  std::vector<int> landmark_ids() const;

  std::vector<int> encode(std::string_view sentence) const;
  std::string decode(std::span<const int> ids) const;

 private:
  Vocabulary();
  std::vector<std::string> words_;
  int first_noun_ = 0;
  std::size_t landmark_count_ = 0;
};

}  // namespace delan::world
