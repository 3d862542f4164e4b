#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "copypaste/fragments.hpp"
#include "oracles.hpp"

namespace copypaste {
namespace {

using Seq = std::vector<std::string>;

std::vector<CopyFragment> detect(const Seq& c, const Seq& a) {
  return detect_fragments(std::span<const std::string>(c), std::span<const std::string>(a)).fragments;
}

TEST(DetectFragments, IdentityIsOneFullFragment) {
  const Seq s = {"the", "cat", "sat"};
  EXPECT_EQ(detect(s, s), (std::vector<CopyFragment>{{0, 0, 3}}));
}

TEST(DetectFragments, DisjointVocabulary) {
  EXPECT_TRUE(detect({"a", "b", "c"}, {"x", "y"}).empty());
}

TEST(DetectFragments, GreedyHandTrace) {
  const Seq c = {"the", "cat", "sat", "on", "the", "mat"};
  const Seq a = {"the", "cat", "on", "the", "mat"};
  EXPECT_EQ(detect(c, a), (std::vector<CopyFragment>{{0, 0, 2}, {2, 3, 3}}));
}

TEST(DetectFragments, TieGoesToSmallestContextStart) {
  EXPECT_EQ(detect({"x", "a", "b", "y", "a", "b"}, {"a", "b"}),
            (std::vector<CopyFragment>{{0, 1, 2}}));
}

TEST(DetectFragments, EmptyInputs) {
  EXPECT_TRUE(detect({}, {"a"}).empty());
  const auto fs = detect_fragments(std::span<const std::string>(), std::span<const std::string>());
  EXPECT_EQ(fs.answer_len, 0u);
}

TEST(DetectFragments, PunctuationIsInvisible) {
  const TokenSeq c = tokenize("The cat, it sat.");
  const TokenSeq a = tokenize("the cat it sat");
  const FragmentSet fs = detect_fragments(c, a);
  ASSERT_EQ(fs.fragments.size(), 1u);
  EXPECT_EQ(fs.fragments[0].length, 4u);
  EXPECT_EQ(fs.answer_len, 4u);
}

TEST(DetectFragments, ByteSpansMapBackToSource) {
  const TokenSeq c = tokenize("Alpha beta gamma delta.");
  const TokenSeq a = tokenize("We saw Beta Gamma there");
  const FragmentSet fs = detect_fragments(c, a);
  ASSERT_EQ(fs.fragments.size(), 1u);
  const ByteSpan as = answer_bytes(a, fs.fragments[0]);
  const ByteSpan cs = context_bytes(c, fs.fragments[0]);
  EXPECT_EQ(a.source().substr(as.begin, as.size()), "Beta Gamma");
  EXPECT_EQ(c.source().substr(cs.begin, cs.size()), "beta gamma");
}

Seq random_seq(std::mt19937& rng, std::size_t max_len) {
  static const Seq alphabet = {"a", "b", "c", "d"};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, 3);
  Seq s(len(rng));
  for (auto& t : s) t = alphabet[sym(rng)];
  return s;
}

TEST(DetectFragmentsProperty, MatchesBruteForceOracle) {
  std::mt19937 rng(2024);
  for (int iter = 0; iter < 5000; ++iter) {
    const Seq c = random_seq(rng, 12);
    const Seq a = random_seq(rng, 12);
    const auto got = detect(c, a);
    const auto want = oracle::fragments(c, a);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].answer_start, std::get<0>(want[i]));
      EXPECT_EQ(got[i].context_start, std::get<1>(want[i]));
      EXPECT_EQ(got[i].length, std::get<2>(want[i]));
    }
  }
}

TEST(DetectFragmentsProperty, DisjointVerbatimAndMonotone) {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 3000; ++iter) {
    const Seq c = random_seq(rng, 20);
    const Seq a = random_seq(rng, 20);
    const FragmentSet fs = detect_fragments(std::span<const std::string>(c), std::span<const std::string>(a));
    std::size_t prev_end = 0;
    for (const auto& f : fs.fragments) {
      ASSERT_GE(f.answer_start, prev_end);
      ASSERT_GE(f.length, 1u);
      prev_end = f.answer_start + f.length;
      for (std::size_t t = 0; t < f.length; ++t) {
        ASSERT_EQ(a[f.answer_start + t], c[f.context_start + t]);
      }
    }
    Seq longer = c;
    const Seq extra = random_seq(rng, 8);
    longer.insert(longer.end(), extra.begin(), extra.end());
    const FragmentSet more =
        detect_fragments(std::span<const std::string>(longer), std::span<const std::string>(a));
    ASSERT_GE(more.copied_tokens(), fs.copied_tokens());
  }
}

}  // namespace
}  // namespace copypaste
