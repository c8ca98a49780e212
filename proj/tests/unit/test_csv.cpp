#include <gtest/gtest.h>

#include <sstream>

#include "reqlens/csv.hpp"
#include "reqlens/error.hpp"
#include "reqlens/random.hpp"

using reqlens::csv::Reader;

namespace {
std::vector<std::vector<std::string>> read_all(const std::string& text, char delim = ',') {
  std::istringstream in(text);
  Reader r(in, delim);
  std::vector<std::vector<std::string>> out;
  while (auto rec = r.next()) out.push_back(rec->fields);
  return out;
}
}  // namespace

TEST(Csv, PlainFields) {
  const auto rows = read_all("a,b,c\n1,2,3\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "2", "3"}));
}

TEST(Csv, QuotedCommaNewlineAndEscapedQuote) {
  const auto rows = read_all("\"x, y\",\"line1\nline2\",\"say \"\"hi\"\"\"\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][0], "x, y");
  EXPECT_EQ(rows[0][1], "line1\nline2");
  EXPECT_EQ(rows[0][2], "say \"hi\"");
}

TEST(Csv, CrlfAndMissingFinalNewline) {
  const auto rows = read_all("a,b\r\nc,d");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][1], "b");
  EXPECT_EQ(rows[1][1], "d");
}

TEST(Csv, EmptyFieldsKept) {
  const auto rows = read_all(",,\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].size(), 3u);
}

TEST(Csv, OtherDelimiter) {
  const auto rows = read_all("a;b\n", ';');
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][1], "b");
}

TEST(Csv, RecordLineNumbers) {
  std::istringstream in("a\n\"b\nc\"\nd\n");
  Reader r(in);
  EXPECT_EQ(r.next()->line, 1u);
  EXPECT_EQ(r.next()->line, 2u);
  EXPECT_EQ(r.next()->line, 4u);
}

TEST(Csv, UnterminatedQuoteIsMalformed) {
  std::istringstream in("ok\n\"never closed,\n");
  Reader r(in);
  ASSERT_TRUE(r.next());
  try {
    r.next();
    FAIL();
  } catch (const reqlens::error& e) {
    EXPECT_EQ(e.code(), reqlens::errc::malformed_record);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Csv, WriteThenReadRoundTrips) {
  reqlens::Rng rng(5);
  const std::string alphabet = "ab ,\"\n\r;x";
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::string>> rows(1 + rng.below(4));
    for (auto& row : rows) {
      row.resize(1 + rng.below(4));
      for (auto& f : row) {
        const auto len = rng.below(6);
        for (std::uint32_t k = 0; k < len; ++k) f += alphabet[rng.below(alphabet.size())];
      }
    }
    std::ostringstream out;
    for (const auto& row : rows) reqlens::csv::write_row(out, row);
    EXPECT_EQ(read_all(out.str()), rows) << out.str();
  }
}
