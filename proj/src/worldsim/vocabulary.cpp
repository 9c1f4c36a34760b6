#include "delan/worldsim/vocabulary.hpp"

#include <sstream>
#include <stdexcept>

namespace delan::world {

namespace {

constexpr const char* kSpecial[] = {"[PAD]", "[CLS]"};
constexpr const char* kNouns[] = {"couch", "table",  "chair", "bed",  "lamp", "sink",   "door",
                                  "stairs", "plant", "painting", "tv", "fridge", "desk", "shelf",
                                  "rug",   "window", "mirror", "piano", "oven", "bathtub"};
constexpr const char* kOther[] = {
    // verbs
    "go", "walk", "head", "move", "turn", "continue", "pass", "keep", "wait",
    // directions
    "forward", "left", "right", "back", "around", "straight", "ahead",
    // function words
    "the", "past", "toward", "at", "stop", "then", "and", "to", "a", "again", "by", "near", "next", "you",
    "reach", "until", "there", "of", "on", "your", "from", "in", "into", "room", "hallway", "corner"};

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* w : kSpecial) words_.emplace_back(w);
  first_noun_ = static_cast<int>(words_.size());
  for (const char* w : kNouns) words_.emplace_back(w);
  landmark_count_ = std::size(kNouns);
  for (const char* w : kOther) words_.emplace_back(w);
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v;
  return v;
}

int Vocabulary::id(std::string_view word) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i] == word) return static_cast<int>(i);
  throw std::out_of_range("unknown word: " + std::string(word));
}

int Vocabulary::noun_of_class(int cls) const {
  if (cls < 0 || static_cast<std::size_t>(cls) >= landmark_count_)
    throw std::out_of_range("landmark class out of range");
  return first_noun_ + cls;
}

int Vocabulary::class_of_noun(int id) const {
  const int c = id - first_noun_;
  return c >= 0 && static_cast<std::size_t>(c) < landmark_count_ ? c : -1;
}

std::vector<int> Vocabulary::landmark_ids() const {
  std::vector<int> out;
  for (std::size_t c = 0; c < landmark_count_; ++c) out.push_back(first_noun_ + static_cast<int>(c));
  return out;
}

std::vector<int> Vocabulary::encode(std::string_view sentence) const {
  std::istringstream in{std::string(sentence)};
  std::vector<int> out;
  for (std::string w; in >> w;) out.push_back(id(w));
  return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) {
    if (!out.empty()) out += ' ';
    out += word(i);
  }
  return out;
}

}  // namespace delan::world
