#include "webshop/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webshop/error.hpp"
#include "webshop/rng.hpp"
#include "webshop/text.hpp"

namespace webshop {

using ojson = nlohmann::ordered_json;

Price Price::from_dollars(double dollars) {
    return Price(static_cast<std::int64_t>(std::llround(dollars * 100.0)));
}

std::string Price::str() const {
    char buf[32];
    if (cents_ % 100 == 0) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(cents_ / 100));
    } else {
        std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(cents_ / 100),
                      static_cast<long long>(cents_ % 100));
    }
    return buf;
}

const std::vector<std::string>* Product::option_values(const std::string& field) const {
    for (const auto& [name, values] : option_groups)
        if (name == field) return &values;
    return nullptr;
}

bool Product::has_option(const std::string& field, const std::string& value) const {
    const auto* values = option_values(field);
    return values && std::find(values->begin(), values->end(), value) != values->end();
}

void validate_product(const Product& p) {
    if (p.id.empty()) throw Error(ErrorCode::kMalformedRecord, "product id is empty");
    if (p.title.empty() || tokenize(p.title).empty())
        throw Error(ErrorCode::kMalformedRecord, "product " + p.id + " has no title words");
    if (p.price.cents() <= 0)
        throw Error(ErrorCode::kInvalidPrice, "product " + p.id + " has non-positive price");
    if (p.category.empty()) throw Error(ErrorCode::kMalformedRecord, "product " + p.id + " has no category");
    std::set<std::string> fields;
    for (const auto& [field, values] : p.option_groups) {
        if (field.empty() || !fields.insert(field).second)
            throw Error(ErrorCode::kMalformedRecord, "product " + p.id + " has a repeated or empty option field");
        std::set<std::string> seen;
        for (const auto& v : values)
            if (v.empty() || !seen.insert(v).second)
                throw Error(ErrorCode::kMalformedRecord,
                            "product " + p.id + " repeats option value '" + v + "' in " + field);
    }
    for (const auto& a : p.attributes) {
        auto n = tokenize(a).size();
        if (a != to_lower(a) || n < 1 || n > 3)
            throw Error(ErrorCode::kMalformedRecord, "product " + p.id + " has bad attribute '" + a + "'");
    }
}

Catalog::Catalog(std::vector<Product> products) : products_(std::move(products)) {
    for (std::size_t i = 0; i < products_.size(); ++i) {
        const Product& p = products_[i];
        validate_product(p);
        if (!by_id_.emplace(p.id, i).second)
            throw Error(ErrorCode::kDuplicateId, "duplicate product id " + p.id);
        lexicon_.insert(p.attributes.begin(), p.attributes.end());
        if (std::find(categories_.begin(), categories_.end(), p.category) == categories_.end())
            categories_.push_back(p.category);
    }
}

std::optional<std::size_t> Catalog::ordinal_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

const Product* Catalog::find(const std::string& id) const {
    auto ord = ordinal_of(id);
    return ord ? &products_[*ord] : nullptr;
}

Catalog Catalog::with_attributes(const std::map<std::string, std::set<std::string>>& assignment) const {
    std::vector<Product> copy = products_;
    for (auto& p : copy) {
        auto it = assignment.find(p.id);
        p.attributes = it == assignment.end() ? std::set<std::string>{} : it->second;
    }
    return Catalog(std::move(copy));
}

// ---------------------------------------------------------------------------
// Record format

std::string product_to_json_line(const Product& p) {
    ojson j;
    j["id"] = p.id;
    j["title"] = p.title;
    j["description"] = p.description;
    j["overview"] = p.overview;
    j["price"] = p.price.dollars();
    ojson options = ojson::object();
    for (const auto& [field, values] : p.option_groups) options[field] = values;
    j["options"] = options;
    j["attributes"] = std::vector<std::string>(p.attributes.begin(), p.attributes.end());
    j["category"] = p.category;
    j["subcategory_chain"] = p.subcategory_chain;
    return j.dump();
}

namespace {

std::string required_string(const ojson& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string())
        throw Error(ErrorCode::kMalformedRecord, std::string("missing or non-string field '") + key + "'");
    return j[key].get<std::string>();
}

std::vector<std::string> string_array(const ojson& j, const char* key) {
    if (!j.contains(key)) return {};
    const ojson& arr = j[key];
    if (!arr.is_array()) throw Error(ErrorCode::kMalformedRecord, std::string("field '") + key + "' is not an array");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw Error(ErrorCode::kMalformedRecord, std::string("non-string in '") + key + "'");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

Product product_from_json_line(const std::string& line) {
    ojson j;
    try {
        j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "record is not an object");
    Product p;
    p.id = required_string(j, "id");
    p.title = required_string(j, "title");
    p.description = j.contains("description") ? required_string(j, "description") : "";
    p.overview = j.contains("overview") ? required_string(j, "overview") : "";
    if (!j.contains("price") || !j["price"].is_number())
        throw Error(ErrorCode::kMalformedRecord, "missing or non-numeric price");
    double dollars = j["price"].get<double>();
    if (!std::isfinite(dollars) || dollars <= 0.0)
        throw Error(ErrorCode::kInvalidPrice, "product " + p.id + " has non-positive price");
    p.price = Price::from_dollars(dollars);
    if (j.contains("options")) {
        const ojson& opts = j["options"];
        if (!opts.is_object()) throw Error(ErrorCode::kMalformedRecord, "options is not an object");
        for (auto it = opts.begin(); it != opts.end(); ++it) {
            if (!it.value().is_array()) throw Error(ErrorCode::kMalformedRecord, "option group is not an array");
            std::vector<std::string> values;
            for (const auto& v : it.value()) {
                if (!v.is_string()) throw Error(ErrorCode::kMalformedRecord, "non-string option value");
                values.push_back(v.get<std::string>());
            }
            p.option_groups.emplace_back(it.key(), std::move(values));
        }
    }
    auto attrs = string_array(j, "attributes");
    p.attributes = std::set<std::string>(attrs.begin(), attrs.end());
    p.category = required_string(j, "category");
    p.subcategory_chain = string_array(j, "subcategory_chain");
    validate_product(p);
    return p;
}

LoadResult parse_catalog(const std::string& jsonl, bool strict) {
    LoadResult result;
    std::vector<Product> products;
    std::set<std::string> ids;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            Product p = product_from_json_line(line);
            if (!ids.insert(p.id).second) throw Error(ErrorCode::kDuplicateId, "duplicate product id " + p.id);
            products.push_back(std::move(p));
        } catch (const Error& e) {
            std::string msg = "line " + std::to_string(line_no) + ": " + e.what();
            if (strict) throw Error(e.code(), msg);
            ++result.skipped;
            result.skip_reasons.push_back(std::move(msg));
        }
    }
    result.catalog = Catalog(std::move(products));
    return result;
}

LoadResult load_catalog(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_catalog(buf.str(), strict);
}

std::string serialize_catalog(const Catalog& catalog) {
    std::string out;
    for (const auto& p : catalog.products()) {
        out += product_to_json_line(p);
        out += '\n';
    }
    return out;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << serialize_catalog(catalog);
}

// ---------------------------------------------------------------------------
// Synthetic generation

const std::vector<CategoryVocabulary>& builtin_vocabulary() {
    static const std::vector<CategoryVocabulary> vocab = {
        {"fashion",
         {{"Clothing, Shoes & Jewelry", "Men", "Shoes", "Sneakers"},
          {"Clothing, Shoes & Jewelry", "Women", "Clothing", "Jackets"},
          {"Clothing, Shoes & Jewelry", "Women", "Accessories", "Scarves"}},
         {{"sneakers", "trainers", "loafers"}, {"jacket", "parka", "windbreaker"}, {"scarf", "shawl", "wrap"}},
         {"waterproof", "soft sole", "machine wash", "slip resistant", "breathable", "lightweight",
          "rubber sole", "wool blend", "quick drying", "long sleeve", "fleece lined", "hand wash"},
         {"classic", "casual", "urban", "everyday", "retro", "premium", "sport", "cozy"},
         {"Stridewell", "Norvane", "Kelto", "Avalon", "Pikeline", "Moda"},
         {{"color", {"black", "white", "navy", "red", "olive", "grey", "khaki", "beige"}},
          {"size", {"small", "medium", "large", "x-large", "7", "8", "9", "10"}}}},
        {"makeup",
         {{"Beauty & Personal Care", "Skin Care", "Face", "Moisturizers"},
          {"Beauty & Personal Care", "Makeup", "Lips", "Lipstick"},
          {"Beauty & Personal Care", "Hair Care", "Styling", "Hair Oils"}},
         {{"moisturizer", "cream", "lotion"}, {"lipstick", "gloss", "balm"}, {"serum", "oil", "treatment"}},
         {"cruelty free", "paraben free", "long lasting", "dry skin", "sensitive skin", "natural ingredients",
          "fragrance free", "vegan", "travel size", "easy apply", "hyaluronic acid", "non toxic"},
         {"hydrating", "matte", "silky", "radiant", "gentle", "nourishing", "velvet", "daily"},
         {"Lumiere", "Petalia", "Auracare", "Verdant", "Solene", "Mirabel"},
         {{"scent", {"lavender", "rose", "unscented", "citrus", "vanilla", "coconut"}},
          {"volume", {"1 fl oz", "2 fl oz", "4 fl oz", "8 fl oz"}}}},
        {"electronics",
         {{"Electronics", "Headphones", "Earbuds", "Wireless Earbuds"},
          {"Electronics", "Computers", "Accessories", "Keyboards"},
          {"Electronics", "Power", "Chargers", "Power Banks"}},
         {{"earbuds", "headphones", "headset"}, {"keyboard", "mouse", "trackpad"}, {"charger", "powerbank", "adapter"}},
         {"noise cancelling", "fast charging", "long battery", "usb c", "wireless", "bluetooth",
          "water resistant", "high definition", "plug play", "ergonomic design", "dual port", "compact size"},
         {"pro", "smart", "slim", "portable", "ultra", "advanced", "mini", "rugged"},
         {"Voltix", "Sonara", "Quanta", "Tekbay", "Orbix", "Helion"},
         {{"color", {"black", "white", "silver", "blue", "rose gold", "space grey"}},
          {"pack", {"1 pack", "2 pack", "3 pack"}}}},
        {"furniture",
         {{"Home & Kitchen", "Furniture", "Living Room", "Sofas"},
          {"Home & Kitchen", "Window Treatments", "Blinds & Shades", "Roller Shades"},
          {"Home & Kitchen", "Furniture", "Office", "Desks"}},
         {{"sofa", "loveseat", "couch"}, {"shades", "blinds", "curtains"}, {"desk", "table", "workstation"}},
         {"easy install", "easy assemble", "solid wood", "blackout", "living room", "space saving",
          "storage space", "stain resistant", "mid century", "metal frame", "thermal insulated", "cordless"},
         {"modern", "rustic", "elegant", "minimal", "sturdy", "contemporary", "vintage", "compact"},
         {"Oakhaven", "Linden", "Calyx", "Milin", "Nordhus", "Brightway"},
         {{"color", {"walnut", "oak", "espresso", "white", "grey", "charcoal", "ivory"}},
          {"size", {"24 x 36", "36 x 48", "48 x 64", "66 x 66", "72 x 84"}}}},
        {"food",
         {{"Grocery & Gourmet Food", "Snacks", "Chips", "Tortilla Chips"},
          {"Grocery & Gourmet Food", "Beverages", "Coffee", "Ground Coffee"},
          {"Grocery & Gourmet Food", "Pantry", "Spreads", "Nut Butters"}},
         {{"chips", "crisps", "snacks"}, {"coffee", "espresso", "brew"}, {"butter", "spread", "paste"}},
         {"gluten free", "non gmo", "low sugar", "high protein", "plant based", "keto friendly",
          "low calorie", "sugar free", "dairy free", "organic", "gift set", "ready eat"},
         {"roasted", "crunchy", "smooth", "savory", "artisan", "golden", "bold", "wholesome"},
         {"Harvesta", "Goodfield", "Nutrio", "Crispin", "Bramble", "Sunvale"},
         {{"flavor", {"original", "sea salt", "chocolate", "honey", "spicy", "caramel", "maple"}},
          {"size", {"8 ounce", "12 ounce", "16 ounce", "pack of 2", "pack of 6"}}}},
    };
    return vocab;
}

namespace {

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.uniform_index(v.size())];
}

void check_vocabulary(const CategoryVocabulary& v) {
    if (v.name.empty() || v.subcategory_chains.empty() || v.type_nouns.size() != v.subcategory_chains.size() ||
        v.attribute_pool.empty() || v.descriptors.empty() || v.brands.empty())
        throw Error(ErrorCode::kInvalidArgument, "incomplete vocabulary for category '" + v.name + "'");
    for (const auto& nouns : v.type_nouns)
        if (nouns.empty()) throw Error(ErrorCode::kInvalidArgument, "empty type noun list in '" + v.name + "'");
    for (const auto& a : v.attribute_pool) {
        auto n = tokenize(a).size();
        if (a != to_lower(a) || n < 1 || n > 3)
            throw Error(ErrorCode::kInvalidArgument, "bad attribute phrase '" + a + "'");
    }
}

}  // namespace

Catalog generate_synthetic_catalog(const SyntheticCatalogConfig& config, std::uint64_t seed) {
    const auto& vocab = config.vocab_seed_lists.empty() ? builtin_vocabulary() : config.vocab_seed_lists;
    if (config.n_products < 1) throw Error(ErrorCode::kInvalidArgument, "n_products must be >= 1");
    if (config.n_categories < 1 || config.n_categories > vocab.size())
        throw Error(ErrorCode::kInvalidArgument, "n_categories must be in 1.." + std::to_string(vocab.size()));
    if (!(config.min_price > 0.0) || !(config.min_price < config.max_price))
        throw Error(ErrorCode::kInvalidArgument, "price range must satisfy 0 < min < max");
    if (config.max_attributes < 1) throw Error(ErrorCode::kInvalidArgument, "max_attributes must be >= 1");
    if (config.attribute_in_description_prob < 0.0 || config.attribute_in_description_prob > 1.0)
        throw Error(ErrorCode::kInvalidArgument, "attribute_in_description_prob must be in [0, 1]");
    for (std::size_t c = 0; c < config.n_categories; ++c) check_vocabulary(vocab[c]);

    Rng rng(seed);
    std::vector<Product> products;
    std::set<std::string> titles;
    products.reserve(config.n_products);
    for (std::size_t i = 0; i < config.n_products; ++i) {
        const CategoryVocabulary& cat = vocab[rng.uniform_index(config.n_categories)];
        std::size_t chain = rng.uniform_index(cat.subcategory_chains.size());
        const std::string& noun = pick(rng, cat.type_nouns[chain]);

        Product p;
        char id[32];
        std::snprintf(id, sizeof id, "P%06zu", i);
        p.id = id;
        p.category = cat.name;
        p.subcategory_chain = cat.subcategory_chains[chain];

        std::size_t n_att = 1 + rng.uniform_index(std::min(config.max_attributes, cat.attribute_pool.size()));
        std::vector<std::string> atts;
        for (std::size_t k : rng.sample_without_replacement(cat.attribute_pool.size(), n_att))
            atts.push_back(cat.attribute_pool[k]);
        p.attributes = std::set<std::string>(atts.begin(), atts.end());

        // Titles are unique so a title click names exactly one product.
        std::vector<std::size_t> desc_pick;
        std::string brand;
        for (int attempt = 0;; ++attempt) {
            desc_pick = rng.sample_without_replacement(cat.descriptors.size(), 2);
            brand = pick(rng, cat.brands);
            p.title = brand + " " + capitalize(cat.descriptors[desc_pick[0]]) + " " +
                      capitalize(cat.descriptors[desc_pick[1]]) + " ";
            if (attempt >= 50) p.title += std::to_string(100 + i) + " ";
            p.title += capitalize(noun);
            if (titles.insert(p.title).second) break;
        }

        std::string description = "This " + cat.descriptors[desc_pick[0]] + " " + noun + " from " + brand + ".";
        for (const auto& a : atts)
            if (rng.bernoulli(config.attribute_in_description_prob)) description += " Features " + a + ".";
        description += " Designed for " + pick(rng, cat.descriptors) + " use.";
        p.description = description;
        p.overview = brand + " " + noun + " in the " + p.subcategory_chain.back() + " line.";

        for (const auto& [field, pool] : cat.option_pools) {
            if (pool.empty() || config.max_options_per_group == 0 || !rng.bernoulli(0.6)) continue;
            std::size_t n = 1 + rng.uniform_index(std::min(config.max_options_per_group, pool.size()));
            auto idx = rng.sample_without_replacement(pool.size(), n);
            std::sort(idx.begin(), idx.end());
            std::vector<std::string> values;
            for (auto k : idx) values.push_back(pool[k]);
            p.option_groups.emplace_back(field, std::move(values));
        }

        p.price = Price::from_dollars(rng.uniform(config.min_price, config.max_price));
        if (p.price.cents() <= 0) p.price = Price::from_cents(1);
        products.push_back(std::move(p));
    }
    return Catalog(std::move(products));
}

// ---------------------------------------------------------------------------
// Attribute mining

namespace {

std::vector<std::string> bigrams_of(const std::string& text) {
    auto tokens = tokenize(text);
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back(tokens[i] + " " + tokens[i + 1]);
    return out;
}

/// Bigram counts of one product; title and description are not bridged.
std::map<std::string, std::size_t> product_bigrams(const Product& p) {
    std::map<std::string, std::size_t> counts;
    for (const auto& text : {p.title, p.description})
        for (auto& bg : bigrams_of(text)) ++counts[bg];
    return counts;
}

bool stopped(const std::string& bigram, const std::set<std::string>& stoplist) {
    if (stoplist.count(bigram)) return true;
    auto space = bigram.find(' ');
    return stoplist.count(bigram.substr(0, space)) || stoplist.count(bigram.substr(space + 1));
}

}  // namespace

std::vector<std::pair<std::string, double>> rank_category_bigrams(const Catalog& catalog,
                                                                  const std::string& category,
                                                                  const std::set<std::string>& stoplist) {
    std::vector<std::map<std::string, std::size_t>> docs;
    for (const auto& p : catalog.products())
        if (p.category == category) docs.push_back(product_bigrams(p));
    std::map<std::string, std::size_t> df;
    for (const auto& d : docs)
        for (const auto& [bg, tf] : d) ++df[bg];
    const double n = static_cast<double>(docs.size());
    std::map<std::string, double> score;
    for (const auto& d : docs)
        for (const auto& [bg, tf] : d)
            score[bg] += static_cast<double>(tf) * std::log(n / static_cast<double>(df[bg]));
    std::vector<std::pair<std::string, double>> ranked;
    for (auto& [bg, s] : score)
        if (!stopped(bg, stoplist)) ranked.emplace_back(bg, s);
    // std::map iteration is already lexicographic; stable sort keeps it as the tie-break
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

std::map<std::string, std::set<std::string>> mine_attributes(const Catalog& catalog, std::size_t top_k_per_category,
                                                             const std::set<std::string>& stoplist) {
    if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot mine attributes of an empty catalog");
    if (top_k_per_category < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
    std::map<std::string, std::set<std::string>> out;
    for (const auto& category : catalog.categories()) {
        auto ranked = rank_category_bigrams(catalog, category, stoplist);
        if (ranked.size() > top_k_per_category) ranked.resize(top_k_per_category);
        for (const auto& p : catalog.products()) {
            if (p.category != category) continue;
            auto bgs = product_bigrams(p);
            for (const auto& [bg, s] : ranked)
                if (bgs.count(bg)) out[p.id].insert(bg);
        }
    }
    return out;
}

}  // namespace webshop
