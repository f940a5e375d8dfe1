#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

#include "webshop/rng.hpp"

namespace fixtures {

using namespace webshop;

Product product(std::string id, std::string title, std::int64_t cents, OptionGroups options,
                std::set<std::string> attributes, std::string category, std::vector<std::string> chain) {
    Product p;
    p.id = std::move(id);
    p.title = std::move(title);
    p.description = "About " + p.title + ".";
    for (const auto& a : attributes) p.description += " Features " + a + ".";
    p.overview = p.title + " overview.";
    p.price = Price::from_cents(cents);
    p.option_groups = std::move(options);
    p.attributes = std::move(attributes);
    p.category = std::move(category);
    p.subcategory_chain = std::move(chain);
    return p;
}

std::shared_ptr<const Catalog> tiny_catalog() {
    const std::vector<std::string> lamps = {"Home", "Lighting", "Lamps"};
    std::vector<Product> ps;
    ps.push_back(product("P1", "Stride Canvas Sneaker", 4500, {{"color", {"red", "blue"}}, {"size", {"8", "9"}}},
                         {"lightweight", "waterproof"}));
    ps.push_back(product("P2", "Stride Leather Sneaker", 7000, {{"color", {"black"}}}, {"waterproof"}));
    ps.push_back(product("P3", "Trail Running Shoe", 5200, {{"size", {"9", "10"}}}, {"lightweight"}, "fashion",
                         {"Clothing", "Shoes", "Running"}));
    ps.push_back(product("P4", "Glow Desk Lamp", 2500, {{"color", {"white", "black"}}}, {"dimmable", "usb powered"},
                         "furniture", lamps));
    ps.push_back(product("P5", "Glow Floor Lamp", 8900, {}, {"dimmable"}, "furniture", lamps));
    ps.push_back(product("P6", "Oak Side Table", 12000, {}, {"solid wood"}, "furniture",
                         {"Home", "Furniture", "Tables"}));
    return std::make_shared<const Catalog>(std::move(ps));
}

std::vector<Goal> tiny_goals() {
    Goal a;
    a.goal_id = "sneaker";
    a.target_product_id = "P1";
    a.u_att = {"waterproof"};
    a.u_opt = {{"color", "red"}, {"size", "9"}};
    a.u_price = Price::from_cents(6000);
    a.instruction_text = "i need a waterproof sneaker in red color and 9 size, and price lower than 60 dollars";
    Goal b;
    b.goal_id = "lamp";
    b.target_product_id = "P4";
    b.u_att = {"dimmable"};
    b.u_price = Price::from_cents(3000);
    b.instruction_text = "find me a dimmable desk lamp, and price lower than 30 dollars";
    return {a, b};
}

std::shared_ptr<const Environment> tiny_env() {
    auto catalog = tiny_catalog();
    auto index = std::make_shared<const SearchIndex>(build_index(*catalog));
    return std::make_shared<const Environment>(catalog, index, tiny_goals());
}

std::shared_ptr<const Environment> synthetic_env(std::size_t n_products, std::size_t n_goals, std::uint64_t seed) {
    SyntheticCatalogConfig cc;
    cc.n_products = n_products;
    auto catalog = std::make_shared<const Catalog>(generate_synthetic_catalog(cc, seed));
    auto index = std::make_shared<const SearchIndex>(build_index(*catalog));
    return std::make_shared<const Environment>(catalog, index, generate_goals(*catalog, n_goals, mix_seed(seed, 99)));
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("webshop-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace fixtures

#include "bm25_oracle.hpp"

namespace fixtures {

std::string random_query(const webshop::Catalog& catalog, std::uint64_t seed) {
    webshop::Rng rng(seed);
    const auto& p = catalog.at(rng.uniform_index(catalog.size()));
    std::vector<std::string> words;
    Bm25Oracle::split(p.title + " " + p.description, words);
    std::string q;
    const std::size_t n = 1 + rng.uniform_index(5);
    for (std::size_t i = 0; i < n; ++i) q += words[rng.uniform_index(words.size())] + " ";
    if (rng.bernoulli(0.2)) q += "zzyzx";
    return q;
}

}  // namespace fixtures
