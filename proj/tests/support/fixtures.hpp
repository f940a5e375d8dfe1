#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "webshop/catalog.hpp"
#include "webshop/goals.hpp"
#include "webshop/search.hpp"
#include "webshop/session.hpp"

namespace fixtures {

webshop::Product product(std::string id, std::string title, std::int64_t cents,
                         webshop::OptionGroups options = {}, std::set<std::string> attributes = {"plain"},
                         std::string category = "fashion",
                         std::vector<std::string> chain = {"Clothing", "Shoes", "Sneakers"});

/// Six hand-written products across two categories.
std::shared_ptr<const webshop::Catalog> tiny_catalog();

/// Goals on tiny_catalog: "sneaker" wants P1 (red, size 9), "lamp" wants P4.
std::vector<webshop::Goal> tiny_goals();

std::shared_ptr<const webshop::Environment> tiny_env();

/// Synthetic catalog + index + generated goals.
std::shared_ptr<const webshop::Environment> synthetic_env(std::size_t n_products, std::size_t n_goals,
                                                          std::uint64_t seed);

/// Fresh temporary directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace fixtures
