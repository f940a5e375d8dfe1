#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace webshop {

/// Money in integer cents so that price comparisons are exact.
class Price {
public:
    constexpr Price() = default;
    static constexpr Price from_cents(std::int64_t cents) { return Price(cents); }
    /// Rounds half away from zero to the nearest cent.
    static Price from_dollars(double dollars);

    constexpr std::int64_t cents() const { return cents_; }
    double dollars() const { return static_cast<double>(cents_) / 100.0; }
    /// "12.50", or "90" for whole-dollar amounts.
    std::string str() const;

    friend constexpr auto operator<=>(Price, Price) = default;

private:
    constexpr explicit Price(std::int64_t cents) : cents_(cents) {}
    std::int64_t cents_ = 0;
};

/// Option groups keep insertion order; that order drives button order on
/// the item page.
using OptionGroups = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct Product {
    std::string id;
    std::string title;
    std::string description;
    std::string overview;
    Price price;
    OptionGroups option_groups;
    std::set<std::string> attributes;
    std::string category;
    std::vector<std::string> subcategory_chain;

    const std::vector<std::string>* option_values(const std::string& field) const;
    bool has_option(const std::string& field, const std::string& value) const;

    friend bool operator==(const Product&, const Product&) = default;
};

class Catalog {
public:
    Catalog() = default;
    /// Validates every Product invariant and id uniqueness; throws Error.
    explicit Catalog(std::vector<Product> products);

    const std::vector<Product>& products() const { return products_; }
    std::size_t size() const { return products_.size(); }
    bool empty() const { return products_.empty(); }

    const Product& at(std::size_t ordinal) const { return products_.at(ordinal); }
    std::optional<std::size_t> ordinal_of(const std::string& id) const;
    const Product* find(const std::string& id) const;

    const std::set<std::string>& attribute_lexicon() const { return lexicon_; }
    /// Distinct categories in first-appearance order.
    const std::vector<std::string>& categories() const { return categories_; }

    /// Returns a copy whose attribute sets are replaced by `assignment`
    /// (products missing from the map keep an empty set).
    Catalog with_attributes(const std::map<std::string, std::set<std::string>>& assignment) const;

    friend bool operator==(const Catalog& a, const Catalog& b) { return a.products_ == b.products_; }

private:
    std::vector<Product> products_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::set<std::string> lexicon_;
    std::vector<std::string> categories_;
};

/// Throws Error(kMalformedRecord / kInvalidPrice / ...) on a broken product.
void validate_product(const Product& product);

struct LoadResult {
    Catalog catalog;
    std::size_t skipped = 0;
    std::vector<std::string> skip_reasons;
};

/// Reads a line-delimited JSON product file. In strict mode the first bad
/// record throws; otherwise bad records (including duplicate ids after the
/// first occurrence) are skipped and counted.
LoadResult load_catalog(const std::filesystem::path& path, bool strict);
LoadResult parse_catalog(const std::string& jsonl, bool strict);

std::string product_to_json_line(const Product& product);
Product product_from_json_line(const std::string& line);
std::string serialize_catalog(const Catalog& catalog);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

/// Per-category vocabulary used by the synthetic generator.
struct CategoryVocabulary {
    std::string name;
    std::vector<std::vector<std::string>> subcategory_chains;
    /// Product-type nouns, one list per subcategory chain.
    std::vector<std::vector<std::string>> type_nouns;
    std::vector<std::string> attribute_pool;
    std::vector<std::string> descriptors;
    std::vector<std::string> brands;
    std::vector<std::pair<std::string, std::vector<std::string>>> option_pools;
};

struct SyntheticCatalogConfig {
    std::size_t n_products = 200;
    std::size_t n_categories = 5;
    /// Empty means the built-in five-category vocabulary.
    std::vector<CategoryVocabulary> vocab_seed_lists;
    std::size_t max_options_per_group = 4;
    std::size_t max_attributes = 4;
    double min_price = 5.0;
    double max_price = 200.0;
    double attribute_in_description_prob = 0.8;
};

const std::vector<CategoryVocabulary>& builtin_vocabulary();

Catalog generate_synthetic_catalog(const SyntheticCatalogConfig& config, std::uint64_t seed);

/// TF-IDF bigram mining per category (raw tf x ln(N/df), documents are
/// products, text is title + description). Returns product id -> mined set.
std::map<std::string, std::set<std::string>> mine_attributes(
    const Catalog& catalog, std::size_t top_k_per_category, const std::set<std::string>& stoplist);

/// Ranked (bigram, score) list for one category; exposed for inspection.
std::vector<std::pair<std::string, double>> rank_category_bigrams(
    const Catalog& catalog, const std::string& category, const std::set<std::string>& stoplist);

}  // namespace webshop
