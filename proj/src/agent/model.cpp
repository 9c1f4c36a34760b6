#include "delan/agent/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "delan/worldsim/vocabulary.hpp"

namespace delan::agent {

using ad::Var;

namespace {

Var linear(Graph& g, const std::string& name, Var x) {
  return ad::add_row(ad::matmul(x, g.p(name + ".w")), g.p(name + ".b"));
}

Var norm(Graph& g, const std::string& name, Var x) {
  return ad::layer_norm(x, g.p(name + ".g"), g.p(name + ".b"));
}

Var attention(Graph& g, const std::string& name, Var q_in, Var kv_in, std::span<const std::uint8_t> allowed) {
  const std::size_t heads = g.config().heads;
  const std::size_t dh = g.config().d / heads;
  const Var q = linear(g, name + ".q", q_in);
  const Var k = linear(g, name + ".k", kv_in);
  const Var v = linear(g, name + ".v", kv_in);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = heads == 1 ? q : ad::slice_cols(q, h * dh, dh);
    const Var kh = heads == 1 ? k : ad::slice_cols(k, h * dh, dh);
    const Var vh = heads == 1 ? v : ad::slice_cols(v, h * dh, dh);
    const Var a = ad::softmax_rows(ad::scale(ad::matmul_bt(qh, kh), scale), allowed);
    outs.push_back(ad::matmul(a, vh));
  }
  return linear(g, name + ".o", heads == 1 ? outs[0] : ad::concat_cols(outs));
}

/// Post-norm transformer block.
Var encoder_layer(Graph& g, const std::string& name, Var x, std::span<const std::uint8_t> allowed) {
  x = norm(g, name + ".ln1", ad::add(x, g.drop(attention(g, name + ".attn", x, x, allowed))));
  const Var f = linear(g, name + ".ff2", ad::gelu(linear(g, name + ".ff1", x)));
  return norm(g, name + ".ln2", ad::add(x, g.drop(f)));
}

Var text_encoder(Graph& g, const std::string& name, const std::vector<int>& tokens, const std::vector<int>& positions,
                 const std::vector<int>& segments, std::span<const std::uint8_t> allowed) {
  Var x = ad::add(ad::add(ad::gather_rows(g.p(name + ".tok"), tokens), ad::gather_rows(g.p(name + ".pos"), positions)),
                  ad::gather_rows(g.p(name + ".seg"), segments));
  x = g.drop(norm(g, name + ".ln", x));
  for (std::size_t l = 0; l < g.config().text_layers; ++l)
    x = encoder_layer(g, name + ".layer" + std::to_string(l), x, allowed);
  return x;
}

std::vector<int> iota_from(int start, std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + static_cast<int>(i);
  return v;
}

Var angle_rows(Graph& g, const std::string& name, std::span<const double> angles) {
  Matrix m(angles.size(), 2);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    m(i, 0) = std::sin(angles[i]);
    m(i, 1) = std::cos(angles[i]);
  }
  return linear(g, name, g.constant(std::move(m)));
}

void check_features(const std::vector<int>& ids, std::size_t count) {
  for (int f : ids)
    if (f < 0 || static_cast<std::size_t>(f) >= count) throw std::invalid_argument("unknown feature id");
}

}  // namespace

std::vector<std::uint8_t> causal_mask(std::size_t n) {
  std::vector<std::uint8_t> m(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m[i * n + j] = 1;
  return m;
}

std::vector<int> extract_landmarks(std::span<const int> instruction, const std::unordered_set<int>& lexicon) {
  if (lexicon.empty()) throw std::invalid_argument("extract_landmarks: empty lexicon");
  std::vector<int> out;
  for (int w : instruction)
    if (lexicon.count(w)) out.push_back(w);
  return out;
}

std::unordered_set<int> standard_lexicon() {
  const auto ids = world::Vocabulary::standard().landmark_ids();
  return {ids.begin(), ids.end()};
}

TextEncoding encode_dual_instruction(Graph& g, std::span<const int> instruction, std::span<const int> landmarks) {
  const ModelConfig& c = g.config();
  const std::size_t m = instruction.size(), n = landmarks.size();
  if (1 + m + n > c.max_len) throw std::invalid_argument("encode_dual_instruction: sequence exceeds max_len");
  for (std::span<const int> part : {instruction, landmarks})
    for (int w : part)
      if (w < 0 || static_cast<std::size_t>(w) >= c.vocab_size)
        throw std::invalid_argument("encode_dual_instruction: token id out of range");
  const int cls = world::Vocabulary::standard().cls();

  std::vector<int> head{cls};
  head.insert(head.end(), instruction.begin(), instruction.end());
  const std::vector<int> lm(landmarks.begin(), landmarks.end());

  TextEncoding out;
  out.m = m;
  out.n = n;
  Var cls_source;
  if (c.separation == Separation::independent) {
    const Var a = text_encoder(g, "text", head, iota_from(0, head.size()), std::vector<int>(head.size(), 0), {});
    cls_source = a;
    if (m > 0) out.words = ad::slice_rows(a, 1, m);
    if (n > 0)
      out.landmarks = text_encoder(g, "landmark_text", lm, iota_from(0, n), std::vector<int>(n, 1), {});
  } else {
    std::vector<int> tokens = head;
    tokens.insert(tokens.end(), lm.begin(), lm.end());
    std::vector<int> segments(tokens.size(), 0);
    for (std::size_t i = 1 + m; i < tokens.size(); ++i) segments[i] = 1;
    std::vector<std::uint8_t> allowed;
    if (c.separation == Separation::separate) {
      const std::size_t len = tokens.size();
      allowed.assign(len * len, 0);
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j) allowed[i * len + j] = segments[i] == segments[j];
    }
    const Var x = text_encoder(g, "text", tokens, iota_from(0, tokens.size()), segments, allowed);
    cls_source = x;
    if (m > 0) out.words = ad::slice_rows(x, 1, m);
    if (n > 0) out.landmarks = ad::slice_rows(x, 1 + m, n);
    if (c.cls_without_landmarks && c.separation == Separation::mutual && n > 0)
      cls_source = text_encoder(g, "text", head, iota_from(0, head.size()), std::vector<int>(head.size(), 0), {});
  }
  out.cls = ad::slice_rows(cls_source, 0, 1);
  return out;
}

VisualEncoding encode_observation(Graph& g, const world::Observation& obs) {
  const std::size_t fc = g.config().feature_count;
  if (obs.views.empty() || obs.candidates.empty()) throw std::invalid_argument("encode_observation: empty observation");
  std::vector<std::vector<int>> groups;
  std::vector<double> angles;
  for (const auto& v : obs.views) {
    check_features(v.features, fc);
    groups.push_back(v.features);
    angles.push_back(v.angle);
  }
  VisualEncoding out;
  out.views = norm(g, "vision.ln",
                   ad::add(ad::bag_rows(g.p("vision.feature"), groups), angle_rows(g, "vision.angle", angles)));

  groups.clear();
  angles.clear();
  for (std::size_t i = 0; i < obs.stop_index(); ++i) {
    check_features(obs.candidates[i].features, fc);
    groups.push_back(obs.candidates[i].features);
    angles.push_back(obs.candidates[i].angle);
  }
  Var stop = g.p("vision.stop");
  if (groups.empty()) {
    out.candidates = norm(g, "vision.ln", stop);
  } else {
    const Var moves = ad::add(ad::bag_rows(g.p("vision.feature"), groups), angle_rows(g, "vision.angle", angles));
    const std::vector<Var> parts{moves, stop};
    out.candidates = norm(g, "vision.ln", ad::concat_rows(parts));
  }
  return out;
}

Var encode_history(Graph& g, std::span<const HistoryStep> steps) {
  const ModelConfig& c = g.config();
  const std::size_t t = steps.size();
  if (t + 1 > c.max_history) throw std::invalid_argument("encode_history: history longer than max_history");
  const Var step_table = g.p("history.step");
  std::vector<Var> rows{ad::add(g.p("history.begin"), ad::slice_rows(step_table, 0, 1))};
  if (t > 0) {
    std::vector<Var> pooled;
    std::vector<double> turns;
    for (const auto& s : steps) {
      pooled.push_back(ad::mean_rows(s.views));
      turns.push_back(s.turn);
    }
    rows.push_back(ad::add(ad::add(ad::concat_rows(pooled), angle_rows(g, "history.turn", turns)),
                           ad::slice_rows(step_table, 1, t)));
  }
  Var x = g.drop(norm(g, "history.ln", rows.size() == 1 ? rows[0] : ad::concat_rows(rows)));
  const auto mask = causal_mask(t + 1);
  for (std::size_t l = 0; l < c.history_layers; ++l)
    x = encoder_layer(g, "history.layer" + std::to_string(l), x, mask);
  return t == 0 ? x : ad::slice_rows(x, 1, t);
}

Scores fuse_and_score(Graph& g, const TextEncoding& text, Var history, const VisualEncoding& visual) {
  const ModelConfig& c = g.config();
  const std::size_t nc = visual.candidates.rows();
  if (nc == 0) throw std::invalid_argument("fuse_and_score: no candidates");
  const Var type = g.p("fusion.type");
  const std::vector<Var> parts{ad::add_row(history, ad::slice_rows(type, 0, 1)),
                               ad::add_row(visual.views, ad::slice_rows(type, 1, 1)),
                               ad::add_row(visual.candidates, ad::slice_rows(type, 2, 1))};
  Var v = ad::concat_rows(parts);
  Var t = text.cls;
  if (text.m > 0) {
    const std::vector<Var> tp{text.cls, text.words};
    t = ad::concat_rows(tp);
  }
  for (std::size_t l = 0; l < c.fusion_layers; ++l) {
    const std::string n = "fusion.layer" + std::to_string(l);
    v = norm(g, n + ".ln0", ad::add(v, g.drop(attention(g, n + ".cross", v, t, {}))));
    v = encoder_layer(g, n, v, {});
  }
  const Var cand = ad::slice_rows(v, v.rows() - nc, nc);
  Scores s;
  s.logits = ad::transpose(linear(g, "head.score2", ad::gelu(linear(g, "head.score1", cand))));
  s.value = linear(g, "head.value2", ad::gelu(linear(g, "head.value1", ad::mean_rows(v))));
  return s;
}

}  // namespace delan::agent
