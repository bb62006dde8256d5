// Copyright 2026 The Deanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "deanon/ingest.hpp"
#include "deanon/synth.hpp"

namespace deanon {
namespace {

Ingested parse(const std::string& text, ParseOptions opts = {}) {
  std::istringstream in(text);
  return parse_canonical(in, opts);
}

Ingested parse_blocks(const std::string& text) {
  std::istringstream in(text);
  return parse_movie_per_file(in);
}

std::size_t error_line(const std::string& text, bool blocks = false) {
  try {
    if (blocks) {
      parse_blocks(text);
    } else {
      parse(text);
    }
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no parse error";
  return 0;
}

const std::string kHeader = "record_id,attribute_id,rating,date\n";

TEST(ParseCanonical, Basic) {
  const auto in = parse(kHeader + "u1,m1,4,2005-01-02\nu1,m2,,2005-01-03\n");
  ASSERT_EQ(in.dataset.size(), 1u);
  EXPECT_EQ(in.dataset.record(RecordId{0}).support_size(), 2u);
  const Cell* c = in.dataset.record(RecordId{0}).find(*in.maps.find_attribute("m2"));
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->has_rating());
  EXPECT_EQ(c->date(), parse_iso_date("2005-01-03"));
}

TEST(ParseCanonical, HeaderOnly) {
  const auto in = parse(kHeader);
  EXPECT_EQ(in.dataset.size(), 0u);
  EXPECT_EQ(in.dataset.n_attributes(), 0u);
}

TEST(ParseCanonical, FirstAppearanceIds) {
  const auto in = parse(kHeader + "b,y,1,\na,x,2,\nb,x,3,\n");
  EXPECT_EQ(in.maps.find_record("b"), RecordId{0});
  EXPECT_EQ(in.maps.find_record("a"), RecordId{1});
  EXPECT_EQ(in.maps.find_attribute("y"), AttributeId{0});
  EXPECT_EQ(in.maps.record_key(RecordId{1}), "a");
}

TEST(ParseCanonical, BlankLinesAndCrlf) {
  const auto in = parse("\n" + kHeader + "\r\nu,m,1,\r\n\n");
  EXPECT_EQ(in.dataset.size(), 1u);
}

TEST(ParseCanonical, Errors) {
  EXPECT_EQ(error_line(kHeader + "u,m,9,\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,1\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,1,,\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,x,\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,,\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,1,2040-01-01\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,1,1234567890\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u u,m,1,\n"), 2u);
  EXPECT_EQ(error_line(kHeader + "u,m,1,\nv,m,1,\nu,m,2,\n"), 4u);
  EXPECT_EQ(error_line("user,movie,rating,date\n"), 1u);
  EXPECT_EQ(error_line(kHeader + "a,b,1,\n\n\n\nc,d,1,\nmalformed\n"), 7u);
  EXPECT_THROW(parse(""), ParseError);
  try {
    parse(kHeader + "u,m,7,\n");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseCanonical, RatingScaleIsAParameter) {
  ParseOptions opts;
  opts.rating_scale = 10;
  EXPECT_EQ(parse(kHeader + "u,m,9,\n", opts).dataset.rating_scale(), 10);
}

TEST(ParseBlocks, Examples) {
  const auto one = parse_blocks("1:\n7,3,2005-01-01\n8,4,2005-01-02\n");
  EXPECT_EQ(one.dataset.size(), 2u);
  EXPECT_EQ(one.dataset.n_attributes(), 1u);
  EXPECT_EQ(one.dataset.col_support(AttributeId{0}), 2u);

  const auto two = parse_blocks("1:\n7,3,2005-01-01\n\n2:\n7,5,2005-02-01\n");
  EXPECT_EQ(two.dataset.size(), 1u);
  EXPECT_EQ(two.dataset.record(RecordId{0}).support_size(), 2u);

  EXPECT_EQ(error_line(",3,2005-01-01\n1:\n", true), 1u);
  EXPECT_EQ(error_line("7,3,2005-01-01\n", true), 1u);
  EXPECT_EQ(error_line("1:\n7,3\n", true), 2u);
  EXPECT_EQ(error_line("1:\n7,3,2005-01-01\n1:\n7,2,2005-01-01\n", true), 4u);
}

TEST(ParseBlocks, GoldenFixture) {
  std::ifstream in(DEANON_TEST_DATA "/blocks_fixture.txt");
  ASSERT_TRUE(in);
  const auto data = parse_movie_per_file(in);
  std::ostringstream out;
  write_canonical(out, data.dataset, data.maps);
  std::ifstream golden(DEANON_TEST_DATA "/blocks_golden.csv");
  std::stringstream want;
  want << golden.rdbuf();
  EXPECT_EQ(out.str(), want.str());
}

TEST(WriteCanonical, Examples) {
  std::ostringstream empty;
  write_canonical(empty, Dataset{}, IdMaps{});
  EXPECT_EQ(empty.str(), kHeader);

  const auto in = parse(kHeader + "u,a,1,\nu,b,,2001-01-01\nu,c,3,2002-02-02\n");
  std::ostringstream out;
  write_canonical(out, in.dataset, in.maps);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

std::vector<std::string> sorted_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::sort(lines.begin(), lines.end());
  return lines;
}

class RoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(RoundTrip, SyntheticDataset) {
  SynthSpec spec;
  spec.n_records = 100;
  spec.n_attributes = 300;
  spec.support_mu = 2.5;
  spec.master_seed = 500 + GetParam();
  const Dataset ds = generate(spec);
  const IdMaps maps = IdMaps::synthetic(ds.size(), ds.n_attributes());
  std::ostringstream first;
  write_canonical(first, ds, maps);

  std::istringstream in(first.str());
  const auto parsed = parse_canonical(in);
  // Same content keyed by external ids.
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const Record& orig = ds.record(RecordId{r});
    if (orig.empty()) continue;
    const auto rid = parsed.maps.find_record(maps.record_key(RecordId{r}));
    ASSERT_TRUE(rid);
    const Record& got = parsed.dataset.record(*rid);
    ASSERT_EQ(got.support_size(), orig.support_size());
    for (const auto& e : orig.entries()) {
      const auto aid = parsed.maps.find_attribute(maps.attribute_key(e.attribute));
      ASSERT_TRUE(aid);
      const Cell* c = got.find(*aid);
      ASSERT_NE(c, nullptr);
      EXPECT_EQ(*c, e.cell);
    }
  }
  EXPECT_EQ(parsed.dataset.total_cells(), ds.total_cells());

  std::ostringstream second;
  write_canonical(second, parsed.dataset, parsed.maps);
  EXPECT_EQ(sorted_lines(second.str()), sorted_lines(first.str()));
  std::istringstream in2(second.str());
  const auto reparsed = parse_canonical(in2);
  std::ostringstream third;
  write_canonical(third, reparsed.dataset, reparsed.maps);
  EXPECT_EQ(third.str(), second.str());
}

INSTANTIATE_TEST_SUITE_P(Seeds, RoundTrip, ::testing::Range(0, 5));

TEST(Stats, Examples) {
  const auto in = parse(kHeader + "a,x,1,\nb,x,1,\nc,x,1,\nc,y,2,\n");
  const auto stats = compute_stats(in.dataset);
  EXPECT_EQ(stats.ratings_per_record, (std::map<std::size_t, std::size_t>{{1, 2}, {2, 1}}));
  ASSERT_EQ(stats.attribute_ranks.size(), 2u);
  EXPECT_EQ(stats.attribute_ranks[0].attribute, *in.maps.find_attribute("x"));
  EXPECT_EQ(stats.attribute_ranks[0].rank, 1u);
  for (const auto& m : stats.popularity_marginals) EXPECT_EQ(m.fraction, 0.0);
  EXPECT_EQ(stats.popularity_marginals.size(), 9u);
}

TEST(Stats, TotalsAndTies) {
  SynthSpec spec;
  spec.n_records = 400;
  spec.n_attributes = 1500;
  const Dataset ds = generate(spec);
  const auto stats = compute_stats(ds);
  std::size_t n = 0;
  for (const auto& [k, c] : stats.ratings_per_record) n += c;
  EXPECT_EQ(n, ds.size());
  std::size_t cells = 0;
  for (std::size_t i = 0; i < stats.attribute_ranks.size(); ++i) {
    const auto& r = stats.attribute_ranks[i];
    cells += r.support;
    EXPECT_EQ(r.rank, i + 1);
    if (i > 0) {
      const auto& p = stats.attribute_ranks[i - 1];
      EXPECT_TRUE(p.support > r.support || (p.support == r.support && p.attribute < r.attribute));
    }
  }
  EXPECT_EQ(cells, ds.total_cells());
  for (const auto& m : stats.popularity_marginals) {
    EXPECT_GE(m.fraction, 0.0);
    EXPECT_LE(m.fraction, 1.0);
  }
  // Monotone in both cutoff and minimum count.
  const auto& pm = stats.popularity_marginals;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t k = 1; k < 3; ++k) EXPECT_LE(pm[c * 3 + k].fraction, pm[c * 3 + k - 1].fraction);
  }
  for (std::size_t c = 1; c < 3; ++c) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(pm[c * 3 + k].fraction, pm[(c - 1) * 3 + k].fraction);
  }
}

TEST(IdMaps, KeysAndSynthetic) {
  EXPECT_TRUE(is_valid_key("a-B_9"));
  EXPECT_FALSE(is_valid_key(""));
  EXPECT_FALSE(is_valid_key("a,b"));
  const IdMaps maps = IdMaps::synthetic(2, 3);
  EXPECT_EQ(maps.record_key(RecordId{1}), "r1");
  EXPECT_EQ(maps.attribute_key(AttributeId{2}), "a2");
  EXPECT_EQ(maps.find_attribute("a1"), AttributeId{1});
  EXPECT_FALSE(maps.find_record("nope"));
}

}  // namespace
}  // namespace deanon
