#include <doctest.h>

#include "helpers.hpp"
#include "persel/arrangements.hpp"

using namespace persel;
using corpus::Vocab;
using matchers::TokenStream;
using nd::Index;
using testing::tiny_world;

namespace {

std::vector<Index> ids(int n, Index start = 10) {
  std::vector<Index> v;
  for (int i = 0; i < n; ++i) v.push_back(start + i);
  return v;
}

}  // namespace

TEST_CASE("inputs within budget pass through unchanged") {
  std::vector<std::vector<Index>> persona{ids(3), ids(2)};
  std::vector<std::vector<Index>> context{ids(4), ids(5)};
  std::vector<Index> response = ids(6);
  auto p = persona;
  auto c = context;
  auto r = response;
  matchers::truncate_for_transformer(p, c, r, 64, 3);
  CHECK(p == persona);
  CHECK(c == context);
  CHECK(r == response);
}

TEST_CASE("oldest context utterances are dropped first") {
  std::vector<std::vector<Index>> persona{ids(2)};
  std::vector<std::vector<Index>> context;
  for (int u = 0; u < 40; ++u) context.push_back(ids(10, 100 + 10 * u));
  std::vector<Index> response = ids(5);
  matchers::truncate_for_transformer(persona, context, response, 50, 3);
  CHECK(persona.size() == 1);         // persona untouched
  CHECK(persona[0].size() == 2);
  CHECK(response.size() == 5);        // response untouched
  CHECK(!context.empty());
  CHECK(context.back()[0] == 100 + 10 * 39);  // newest utterance survives
  Index total = 3 + 2 + 5;
  for (const auto& u : context) total += static_cast<Index>(u.size());
  CHECK(total <= 50);
}

TEST_CASE("persona tails go before the response tail") {
  std::vector<std::vector<Index>> persona{ids(10), ids(10)};
  std::vector<std::vector<Index>> context;  // nothing to drop
  std::vector<Index> response = ids(10);
  matchers::truncate_for_transformer(persona, context, response, 3 + 5 + 10, 3);
  Index persona_total = 0;
  for (const auto& p : persona) persona_total += static_cast<Index>(p.size());
  CHECK(persona_total == 5);
  CHECK(response.size() == 10);

  // squeeze further: the response tail shrinks but never below one token
  std::vector<std::vector<Index>> none;
  matchers::truncate_for_transformer(none, none, response, 3 + 4, 3);
  CHECK(response.size() == 4);
}

TEST_CASE("an impossible frame is an error") {
  std::vector<std::vector<Index>> persona;
  std::vector<std::vector<Index>> context;
  std::vector<Index> response = ids(2);
  CHECK_THROWS_WITH(matchers::truncate_for_transformer(persona, context, response, 3, 3),
                    "budget too small");
}

TEST_CASE("arranged lengths stay within budget under fuzzing") {
  nd::Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<Index>> persona, context;
    const int np = static_cast<int>(rng.below(6));
    for (int i = 0; i < np; ++i) persona.push_back(ids(1 + static_cast<int>(rng.below(15))));
    const int nc = static_cast<int>(rng.below(16));
    for (int i = 0; i < nc; ++i) context.push_back(ids(1 + static_cast<int>(rng.below(25))));
    std::vector<Index> response = ids(1 + static_cast<int>(rng.below(25)));
    const Index budget = 8 + rng.below(313);
    matchers::truncate_for_transformer(persona, context, response, budget, 3);
    Index total = 3 + static_cast<Index>(response.size());
    for (const auto& p : persona) total += static_cast<Index>(p.size());
    for (const auto& u : context) total += static_cast<Index>(u.size());
    CHECK(total <= budget);
  }
}

TEST_CASE("the matching pipeline is identical across dual strategies") {
  auto world = tiny_world(51);
  const auto& ex = world.examples[0];
  TokenStream a = matchers::arrange_match_stream(ex, 2, 320);
  TokenStream b = matchers::arrange_match_stream(ex, 2, 320);
  CHECK(a.token_ids == b.token_ids);
  CHECK(a.segment_ids == b.segment_ids);
  CHECK(a.token_ids.front() == Vocab::kCls);
  CHECK(a.token_ids.back() == Vocab::kSep);
  CHECK(a.subtype_ids.empty());

  // segment A covers [CLS] context [SEP], segment B the response tail
  bool seen_b = false;
  for (std::size_t i = 0; i < a.segment_ids.size(); ++i) {
    if (a.segment_ids[i] == 1) seen_b = true;
    if (seen_b) CHECK(a.segment_ids[i] == 1);
  }
}

TEST_CASE("persona pipelines follow their strategy's arrangement") {
  auto world = tiny_world(52);
  const auto& ex = world.examples[0];

  TokenStream na = matchers::arrange_persona_stream(ex, 0, fusion::Strategy::na, 320);
  Index seps = 0;
  for (Index id : na.token_ids)
    if (id == Vocab::kSep) ++seps;
  CHECK(seps == 1);  // persona only

  TokenStream ca = matchers::arrange_persona_stream(ex, 0, fusion::Strategy::ca, 320);
  TokenStream ra0 = matchers::arrange_persona_stream(ex, 0, fusion::Strategy::ra, 320);
  TokenStream ra1 = matchers::arrange_persona_stream(ex, 1, fusion::Strategy::ra, 320);
  CHECK(ca.token_ids != na.token_ids);   // context appended
  CHECK(ra0.token_ids != ra1.token_ids); // response-dependent
  CHECK(ca.segment_ids.back() == 1);
}

TEST_CASE("the joint stream tags persona, context and response subtypes") {
  auto world = tiny_world(53);
  const auto& ex = world.examples[0];
  TokenStream joint = matchers::arrange_joint_stream(ex, 0, 320);
  REQUIRE(joint.subtype_ids.size() == joint.token_ids.size());
  CHECK(joint.subtype_ids.front() == matchers::kSubtypePersona);  // [CLS]
  // all three subtypes appear, in persona -> context -> response order
  Index last = -1;
  bool saw[3] = {false, false, false};
  for (Index s : joint.subtype_ids) {
    CHECK(s >= last - 2);  // order is monotone over spans
    saw[s] = true;
    last = std::max(last, s);
  }
  CHECK(saw[0]);
  CHECK(saw[1]);
  CHECK(saw[2]);
  CHECK(joint.subtype_ids.back() == matchers::kSubtypeResponse);  // trailing [SEP]
}

TEST_CASE("an empty persona reduces the joint stream to context-response") {
  auto world = tiny_world(54, {corpus::PersonaSide::none, corpus::PersonaVersion::original, false});
  const auto& ex = world.examples[0];
  REQUIRE(ex.persona.empty());
  TokenStream joint = matchers::arrange_joint_stream(ex, 0, 320);
  CHECK(joint.subtype_ids.front() == matchers::kSubtypeContext);  // [CLS] follows context now
  for (Index s : joint.subtype_ids) CHECK(s != matchers::kSubtypePersona);
}
