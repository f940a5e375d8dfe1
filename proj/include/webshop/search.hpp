#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "webshop/catalog.hpp"

namespace webshop {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
    std::uint32_t ordinal;
    std::uint32_t tf;
    friend bool operator==(const Posting&, const Posting&) = default;
};

class SearchIndex {
public:
    SearchIndex() = default;

    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t doc_count() const { return doc_lengths_.size(); }
    const Bm25Params& params() const { return params_; }

    /// Empty span when the token is not indexed.
    const std::vector<Posting>& postings_for(const std::string& token) const;
    std::size_t document_frequency(const std::string& token) const;
    double idf(const std::string& token) const;

    friend bool operator==(const SearchIndex&, const SearchIndex&) = default;

private:
    friend SearchIndex build_index(const Catalog&, Bm25Params);
    friend SearchIndex parse_index(const std::string&);

    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    Bm25Params params_;
};

/// Title, description, overview and every option value, space separated.
std::string document_text(const Product& product);

SearchIndex build_index(const Catalog& catalog, Bm25Params params = {});

/// Sorted, de-duplicated query tokens; the scoring order for every path.
std::vector<std::string> unique_query_tokens(std::string_view query);

double bm25_score(const SearchIndex& index, const std::vector<std::string>& query_tokens,
                  std::size_t ordinal);

inline constexpr std::size_t kMaxRetrieved = 50;
inline constexpr std::size_t kResultsPerPage = 10;
inline constexpr std::size_t kMaxPages = 5;

struct ScoredDoc {
    std::uint32_t ordinal;
    double score;
};

/// Term-at-a-time accumulation over postings; the serial reference.
std::vector<ScoredDoc> rank_serial(const SearchIndex& index, std::string_view query,
                                   std::size_t max_results = kMaxRetrieved);

/// Document-parallel scoring (OpenMP). Bit-identical to rank_serial.
std::vector<ScoredDoc> rank_parallel(const SearchIndex& index, std::string_view query,
                                     std::size_t max_results = kMaxRetrieved);

/// Product ids ranked by (score desc, ordinal asc), scores > 0 only.
std::vector<std::string> search(const SearchIndex& index, const Catalog& catalog,
                                std::string_view query, std::size_t max_results = kMaxRetrieved);

struct ResultEntry {
    std::string product_id;
    std::string title;
    Price price;
    friend bool operator==(const ResultEntry&, const ResultEntry&) = default;
};

struct ResultPage {
    std::string query;
    std::size_t page_index = 1;
    std::vector<ResultEntry> entries;
    std::size_t total_retrieved = 0;
};

/// Slices results[(p-1)*10, p*10). page_index must be in 1..5.
ResultPage paginate(const std::vector<std::string>& results, std::size_t page_index,
                    const Catalog& catalog, std::string query = {});

/// Number of non-empty result pages (0 for an empty result list).
std::size_t page_count(std::size_t n_results);

std::string serialize_index(const SearchIndex& index);
SearchIndex parse_index(const std::string& text);
void save_index(const SearchIndex& index, const std::filesystem::path& path);
SearchIndex load_index(const std::filesystem::path& path);

}  // namespace webshop
