#include "persel/fusion.hpp"

#include <stdexcept>

namespace persel::fusion {

using nd::Index;
using nd::Tape;
using nd::Var;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::na: return "na";
    case Strategy::ca: return "ca";
    case Strategy::ra: return "ra";
    case Strategy::cra: return "cra";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "na") return Strategy::na;
  if (s == "ca") return Strategy::ca;
  if (s == "ra") return Strategy::ra;
  if (s == "cra") return Strategy::cra;
  throw std::invalid_argument("strategy must be one of {na, ca, ra, cra}, got '" + s + "'");
}

FusionParams make_fusion(nd::ParamStore& store, const std::string& prefix, Strategy strategy,
                         Index profile_dim, Index ctx_dim, Index resp_dim, nd::Rng& rng) {
  FusionParams p;
  p.strategy = strategy;
  p.profile_dim = profile_dim;
  switch (strategy) {
    case Strategy::na:
      p.score = nd::make_linear(store, prefix + ".score", profile_dim, 1, rng);
      break;
    case Strategy::ca:
      if (ctx_dim != profile_dim) {
        p.align_ctx = nd::make_linear(store, prefix + ".align_ctx", ctx_dim, profile_dim, rng);
        p.has_ctx_align = true;
      }
      break;
    case Strategy::ra:
      if (resp_dim != profile_dim) {
        p.align_resp = nd::make_linear(store, prefix + ".align_resp", resp_dim, profile_dim, rng);
        p.has_resp_align = true;
      }
      break;
    case Strategy::cra:
      p.query = nd::make_linear(store, prefix + ".query", ctx_dim + resp_dim, profile_dim, rng);
      break;
  }
  return p;
}

namespace {

void require_support(const std::vector<std::uint8_t>& mask) {
  for (auto v : mask)
    if (v) return;
  throw std::invalid_argument("empty persona");
}

FusionResult attend(Tape& tape, Var profiles, const std::vector<std::uint8_t>& mask, Var alphas) {
  const Index n = tape.value(profiles).dim(0);
  const Index d = tape.value(profiles).dim(1);
  Var weights = tape.masked_softmax(alphas, mask);
  Var fused = tape.reshape(tape.matmul(tape.reshape(weights, {1, n}), profiles), {d});
  return {fused, weights};
}

Var dot_scores(Tape& tape, Var profiles, Var query) {
  // [n, d] x [d, 1] -> [n]
  const Index n = tape.value(profiles).dim(0);
  const Index d = tape.value(query).dim(0);
  return tape.reshape(tape.matmul(profiles, tape.reshape(query, {d, 1})), {n});
}

}  // namespace

FusionResult fuse_none(Tape& tape, Var profiles, const std::vector<std::uint8_t>& mask,
                       const FusionParams& p) {
  require_support(mask);
  const Index n = tape.value(profiles).dim(0);
  Var alphas = tape.reshape(nd::linear(tape, profiles, p.score), {n});
  return attend(tape, profiles, mask, alphas);
}

FusionResult fuse_context(Tape& tape, Var profiles, const std::vector<std::uint8_t>& mask,
                          Var context_embedding, const FusionParams& p) {
  require_support(mask);
  Var q = p.has_ctx_align ? nd::linear(tape, context_embedding, p.align_ctx) : context_embedding;
  if (tape.value(q).numel() != tape.value(profiles).dim(1))
    throw std::invalid_argument("fuse_context: embedding width does not match profiles");
  return attend(tape, profiles, mask, dot_scores(tape, profiles, q));
}

FusionResult fuse_response(Tape& tape, Var profiles, const std::vector<std::uint8_t>& mask,
                           Var response_embedding, const FusionParams& p) {
  require_support(mask);
  Var q = p.has_resp_align ? nd::linear(tape, response_embedding, p.align_resp) : response_embedding;
  if (tape.value(q).numel() != tape.value(profiles).dim(1))
    throw std::invalid_argument("fuse_response: embedding width does not match profiles");
  return attend(tape, profiles, mask, dot_scores(tape, profiles, q));
}

FusionResult fuse_context_response(Tape& tape, Var profiles,
                                   const std::vector<std::uint8_t>& mask, Var context_embedding,
                                   Var response_embedding, const FusionParams& p) {
  require_support(mask);
  std::vector<Var> parts{context_embedding, response_embedding};
  Var q = nd::linear(tape, tape.concat(parts), p.query);
  return attend(tape, profiles, mask, dot_scores(tape, profiles, q));
}

FusionResult fuse(Tape& tape, const FusionParams& p, Var profiles,
                  const std::vector<std::uint8_t>& mask, Var context_embedding,
                  Var response_embedding) {
  switch (p.strategy) {
    case Strategy::na: return fuse_none(tape, profiles, mask, p);
    case Strategy::ca: return fuse_context(tape, profiles, mask, context_embedding, p);
    case Strategy::ra: return fuse_response(tape, profiles, mask, response_embedding, p);
    case Strategy::cra:
      return fuse_context_response(tape, profiles, mask, context_embedding, response_embedding, p);
  }
  throw std::logic_error("unreachable");
}

}  // namespace persel::fusion
