#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "persel/layers.hpp"
#include "persel/tape.hpp"

namespace persel::fusion {

/// How the persona attention is conditioned: on nothing, the context
/// embedding, the response embedding, or a learned map of both.
enum class Strategy { na, ca, ra, cra };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// Parameters for one fusion head. Only the pieces the strategy needs are
/// allocated; the optional alignment projections appear when the
/// conditioning embedding's width differs from the profile width.
struct FusionParams {
  Strategy strategy = Strategy::na;
  nd::Index profile_dim = 0;
  nd::LinearParams score;      // na: [profile_dim -> 1]
  nd::LinearParams query;      // cra: [ctx_dim + resp_dim -> profile_dim]
  nd::LinearParams align_ctx;  // ca, when ctx_dim != profile_dim
  nd::LinearParams align_resp; // ra, when resp_dim != profile_dim
  bool has_ctx_align = false;
  bool has_resp_align = false;
};

FusionParams make_fusion(nd::ParamStore& store, const std::string& prefix, Strategy strategy,
                         nd::Index profile_dim, nd::Index ctx_dim, nd::Index resp_dim,
                         nd::Rng& rng);

struct FusionResult {
  nd::Var fused;    // [profile_dim]
  nd::Var weights;  // [n_profiles], zero at masked slots
};

/// Self-attention over profiles: scores w^T p_n + b.
FusionResult fuse_none(nd::Tape& tape, nd::Var profiles, const std::vector<std::uint8_t>& mask,
                       const FusionParams& p);
/// Scores are dot products with the context embedding.
FusionResult fuse_context(nd::Tape& tape, nd::Var profiles, const std::vector<std::uint8_t>& mask,
                          nd::Var context_embedding, const FusionParams& p);
/// Scores are dot products with the response embedding.
FusionResult fuse_response(nd::Tape& tape, nd::Var profiles, const std::vector<std::uint8_t>& mask,
                           nd::Var response_embedding, const FusionParams& p);
/// Scores are dot products with a learned map of [context; response].
FusionResult fuse_context_response(nd::Tape& tape, nd::Var profiles,
                                   const std::vector<std::uint8_t>& mask,
                                   nd::Var context_embedding, nd::Var response_embedding,
                                   const FusionParams& p);

/// Strategy dispatch. `profiles` is [n_profiles, profile_dim]; masked
/// profiles get exactly zero weight and zero gradient. Throws
/// "empty persona" when no profile is valid.
FusionResult fuse(nd::Tape& tape, const FusionParams& p, nd::Var profiles,
                  const std::vector<std::uint8_t>& mask, nd::Var context_embedding,
                  nd::Var response_embedding);

}  // namespace persel::fusion
