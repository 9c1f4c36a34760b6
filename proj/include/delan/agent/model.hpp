#pragma once

#include <span>
#include <unordered_set>
#include <vector>

#include "delan/agent/params.hpp"
#include "delan/numerics/tape.hpp"
#include "delan/worldsim/navigation.hpp"

namespace delan::agent {

/// Lexicon members of `instruction` in occurrence order, duplicates kept.
std::vector<int> extract_landmarks(std::span<const int> instruction, const std::unordered_set<int>& lexicon);
std::unordered_set<int> standard_lexicon();

struct TextEncoding {
  ad::Var cls;        ///< 1 x d
  ad::Var words;      ///< m x d
  ad::Var landmarks;  ///< n x d; invalid Var when n == 0
  std::size_t m = 0;
  std::size_t n = 0;
};

/// One pass over [CLS] + instruction + landmarks (or two disjoint passes in
/// independent mode). Throws std::invalid_argument past max_len.
TextEncoding encode_dual_instruction(Graph& g, std::span<const int> instruction, std::span<const int> landmarks);

struct VisualEncoding {
  ad::Var views;       ///< k x d
  ad::Var candidates;  ///< (n_t + 1) x d, STOP last
};

VisualEncoding encode_observation(Graph& g, const world::Observation& obs);

struct HistoryStep {
  ad::Var views;  ///< encoded panorama of that step
  double turn = 0.0;
};

/// Causal temporal encoder over [begin; steps]. Returns max(T, 1) rows:
/// the begin token alone when T == 0, otherwise one row per step (the
/// begin token is attended to but not returned).
ad::Var encode_history(Graph& g, std::span<const HistoryStep> steps);

struct Scores {
  ad::Var logits;  ///< 1 x (n_t + 1)
  ad::Var value;   ///< 1 x 1
};

/// Cross-modal fusion of [history; views; candidates] against [x_cls; X],
/// scored per candidate token.
Scores fuse_and_score(Graph& g, const TextEncoding& text, ad::Var history, const VisualEncoding& visual);

/// Row-major flags, 1 where row i may attend to column j (j <= i).
std::vector<std::uint8_t> causal_mask(std::size_t n);

}  // namespace delan::agent
