#include <cmath>

#include <gtest/gtest.h>

#include "bm25_oracle.hpp"
#include "fixtures.hpp"
#include "webshop/error.hpp"
#include "webshop/search.hpp"
#include "webshop/text.hpp"

using namespace webshop;

namespace {

Catalog synthetic(std::size_t n, std::uint64_t seed) {
    SyntheticCatalogConfig c;
    c.n_products = n;
    return generate_synthetic_catalog(c, seed);
}


}  // namespace

TEST(Index, TwoProductCorpus) {
    std::vector<Product> ps = {fixtures::product("a", "Red Shoe", 100), fixtures::product("b", "Blue Hat Hat", 200)};
    Catalog cat(ps);
    SearchIndex idx = build_index(cat);
    ASSERT_EQ(idx.doc_count(), 2u);
    const double l1 = static_cast<double>(tokenize(document_text(cat.at(0))).size());
    const double l2 = static_cast<double>(tokenize(document_text(cat.at(1))).size());
    EXPECT_DOUBLE_EQ(idx.avg_doc_length(), (l1 + l2) / 2);
    for (const auto& [token, plist] : idx.postings())
        for (std::size_t i = 1; i < plist.size(); ++i) EXPECT_LT(plist[i - 1].ordinal, plist[i].ordinal);
}

TEST(Index, OptionValuesAreIndexed) {
    Catalog cat({fixtures::product("a", "Cotton Pants", 100, {{"color", {"khaki", "navy"}}}),
                 fixtures::product("b", "Wool Socks", 100)});
    SearchIndex idx = build_index(cat);
    ASSERT_EQ(idx.postings_for("khaki").size(), 1u);
    EXPECT_EQ(idx.postings_for("khaki")[0].ordinal, 0u);
    EXPECT_EQ(search(idx, cat, "khaki"), std::vector<std::string>{"a"});
}

TEST(Index, DeterministicAndRoundTrips) {
    Catalog cat = synthetic(300, 4);
    SearchIndex a = build_index(cat), b = build_index(cat);
    EXPECT_EQ(a, b);
    EXPECT_EQ(parse_index(serialize_index(a)), a);
    fixtures::TempDir dir;
    save_index(a, dir / "idx.txt");
    EXPECT_EQ(load_index(dir / "idx.txt"), a);
}

TEST(Index, Errors) {
    EXPECT_THROW(build_index(Catalog{}), Error);
    Bm25Params bad;
    bad.b = 1.5;
    EXPECT_THROW(build_index(*fixtures::tiny_catalog(), bad), Error);
    EXPECT_THROW(parse_index("garbage"), Error);
}

TEST(Bm25, AbsentTokenScoresZero) {
    Catalog cat = synthetic(50, 2);
    SearchIndex idx = build_index(cat);
    for (std::size_t i = 0; i < cat.size(); ++i) EXPECT_EQ(bm25_score(idx, {"qqqq"}, i), 0.0);
    EXPECT_TRUE(search(idx, cat, "qqqq").empty());
}

TEST(Bm25, SingleDocumentClosedForm) {
    Catalog cat({fixtures::product("a", "Lamp", 100)});
    SearchIndex idx = build_index(cat);
    // One document: N = 1, df = 1, len = avglen, so the length norm is 1.
    const double idf = std::log(1.0 + (1 - 1 + 0.5) / (1 + 0.5));
    const auto tokens = tokenize(document_text(cat.at(0)));
    const double tf = static_cast<double>(std::count(tokens.begin(), tokens.end(), "lamp"));
    ASSERT_GE(tf, 2.0);
    const double k1 = 1.2;
    const double expected = idf * tf * (k1 + 1) / (tf + k1);
    EXPECT_NEAR(bm25_score(idx, {"lamp"}, 0), expected, 1e-12);
}

TEST(Bm25, MatchesBruteForceOnFiftyProducts) {
    Catalog cat = synthetic(50, 9);
    SearchIndex idx = build_index(cat);
    fixtures::Bm25Oracle oracle(cat);
    EXPECT_NEAR(idx.avg_doc_length(), oracle.avg_length(), 1e-12);
    for (std::uint64_t q = 0; q < 40; ++q) {
        const std::string query = fixtures::random_query(cat, q);
        for (std::size_t d = 0; d < cat.size(); ++d)
            EXPECT_NEAR(bm25_score(idx, unique_query_tokens(query), d), oracle.score(query, d), 1e-9) << query;
    }
}

TEST(Search, ExactUniqueTitleRanksFirst) {
    Catalog cat = synthetic(200, 3);
    SearchIndex idx = build_index(cat);
    fixtures::Bm25Oracle oracle(cat);
    for (std::size_t i = 0; i < cat.size(); i += 17) {
        const auto& p = cat.at(i);
        auto ranked = search(idx, cat, p.title);
        ASSERT_FALSE(ranked.empty());
        // Whatever ranks first must score at least as high as the product itself.
        const auto top = *cat.ordinal_of(ranked[0]);
        EXPECT_GE(oracle.score(p.title, top), oracle.score(p.title, i));
    }
}

TEST(Search, EmptyQueryAndTokenDuplication) {
    Catalog cat = synthetic(100, 5);
    SearchIndex idx = build_index(cat);
    EXPECT_TRUE(search(idx, cat, "").empty());
    EXPECT_TRUE(search(idx, cat, " ,;- ").empty());
    for (std::uint64_t q = 0; q < 20; ++q) {
        const std::string query = fixtures::random_query(cat, q);
        EXPECT_EQ(search(idx, cat, query), search(idx, cat, query + " " + query + " " + query));
    }
}

TEST(Search, SerialAndParallelAreBitIdentical) {
    Catalog cat = synthetic(400, 6);
    SearchIndex idx = build_index(cat);
    for (std::uint64_t q = 0; q < 50; ++q) {
        const std::string query = fixtures::random_query(cat, q + 1000);
        auto s = rank_serial(idx, query);
        auto p = rank_parallel(idx, query);
        ASSERT_EQ(s.size(), p.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            EXPECT_EQ(s[i].ordinal, p[i].ordinal);
            EXPECT_EQ(s[i].score, p[i].score);
        }
    }
}

TEST(Search, TruncatesAtFiftyAndOrdersTies) {
    std::vector<Product> ps;
    for (int i = 0; i < 70; ++i) ps.push_back(fixtures::product("p" + std::to_string(i), "Same Widget", 100));
    Catalog cat(std::move(ps));
    auto r = search(build_index(cat), cat, "widget");
    ASSERT_EQ(r.size(), 50u);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(r[static_cast<std::size_t>(i)], "p" + std::to_string(i));
}

TEST(Paginate, Slicing) {
    Catalog cat = synthetic(60, 1);
    std::vector<std::string> results;
    for (std::size_t i = 0; i < 50; ++i) results.push_back(cat.at(i).id);
    ResultPage p5 = paginate(results, 5, cat, "q");
    ASSERT_EQ(p5.entries.size(), 10u);
    EXPECT_EQ(p5.entries.front().product_id, results[40]);
    EXPECT_EQ(p5.entries.back().product_id, results[49]);
    EXPECT_EQ(p5.total_retrieved, 50u);

    std::vector<std::string> thirteen(results.begin(), results.begin() + 13);
    EXPECT_EQ(paginate(thirteen, 2, cat).entries.size(), 3u);
    ResultPage p4 = paginate(thirteen, 4, cat);
    EXPECT_TRUE(p4.entries.empty());
    EXPECT_EQ(p4.page_index, 4u);
    EXPECT_THROW(paginate(thirteen, 0, cat), Error);
    EXPECT_THROW(paginate(thirteen, 6, cat), Error);
    EXPECT_EQ(page_count(13), 2u);
    EXPECT_EQ(page_count(0), 0u);
    EXPECT_EQ(page_count(50), 5u);
}
