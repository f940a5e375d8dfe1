#include "webshop/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "webshop/error.hpp"
#include "webshop/text.hpp"

namespace webshop {

namespace {

const std::vector<Posting> kNoPostings;

/// Contribution of one query term to one document. Shared by every ranking
/// path so their floating-point results agree bit for bit.
double term_weight(double idf, std::uint32_t tf, std::uint32_t doc_len, double avg_len, const Bm25Params& p) {
    const double f = static_cast<double>(tf);
    const double norm = avg_len > 0.0 ? static_cast<double>(doc_len) / avg_len : 0.0;
    return idf * f * (p.k1 + 1.0) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ordinal < b.ordinal;
}

std::vector<ScoredDoc> top_positive(std::vector<ScoredDoc> docs, std::size_t max_results) {
    std::erase_if(docs, [](const ScoredDoc& d) { return !(d.score > 0.0); });
    const std::size_t k = std::min(max_results, docs.size());
    std::partial_sort(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(k), docs.end(), ranks_before);
    docs.resize(k);
    return docs;
}

}  // namespace

const std::vector<Posting>& SearchIndex::postings_for(const std::string& token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? kNoPostings : it->second;
}

std::size_t SearchIndex::document_frequency(const std::string& token) const {
    return postings_for(token).size();
}

double SearchIndex::idf(const std::string& token) const {
    const double n = static_cast<double>(doc_count());
    const double df = static_cast<double>(document_frequency(token));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::string document_text(const Product& product) {
    std::string text = product.title + " \n " + product.description + " \n " + product.overview;
    for (const auto& [field, values] : product.option_groups)
        for (const auto& v : values) text += " \n " + v;
    return text;
}

SearchIndex build_index(const Catalog& catalog, Bm25Params params) {
    if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot index an empty catalog");
    if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0)
        throw Error(ErrorCode::kInvalidArgument, "BM25 parameters need k1 >= 0 and 0 <= b <= 1");
    SearchIndex index;
    index.params_ = params;
    std::uint64_t total = 0;
    for (std::size_t ord = 0; ord < catalog.size(); ++ord) {
        auto tokens = tokenize(document_text(catalog.at(ord)));
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [token, count] : tf)
            index.postings_[token].push_back({static_cast<std::uint32_t>(ord), count});
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total += tokens.size();
    }
    index.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(catalog.size());
    return index;
}

std::vector<std::string> unique_query_tokens(std::string_view query) {
    auto tokens = tokenize(query);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

double bm25_score(const SearchIndex& index, const std::vector<std::string>& query_tokens, std::size_t ordinal) {
    if (ordinal >= index.doc_count()) throw Error(ErrorCode::kNotFound, "product ordinal outside the index");
    std::vector<std::string> tokens = query_tokens;
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    double score = 0.0;
    for (const auto& t : tokens) {
        const auto& plist = index.postings_for(t);
        auto it = std::lower_bound(plist.begin(), plist.end(), ordinal,
                                   [](const Posting& p, std::size_t o) { return p.ordinal < o; });
        if (it == plist.end() || it->ordinal != ordinal) continue;
        score += term_weight(index.idf(t), it->tf, index.doc_lengths()[ordinal], index.avg_doc_length(),
                             index.params());
    }
    return score;
}

std::vector<ScoredDoc> rank_serial(const SearchIndex& index, std::string_view query, std::size_t max_results) {
    const auto tokens = unique_query_tokens(query);
    if (tokens.empty()) return {};
    std::vector<ScoredDoc> docs(index.doc_count());
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i] = {static_cast<std::uint32_t>(i), 0.0};
    for (const auto& t : tokens) {
        const double idf = index.idf(t);
        for (const Posting& p : index.postings_for(t))
            docs[p.ordinal].score +=
                term_weight(idf, p.tf, index.doc_lengths()[p.ordinal], index.avg_doc_length(), index.params());
    }
    return top_positive(std::move(docs), max_results);
}

std::vector<ScoredDoc> rank_parallel(const SearchIndex& index, std::string_view query, std::size_t max_results) {
    const auto tokens = unique_query_tokens(query);
    if (tokens.empty()) return {};
    const auto n = static_cast<std::int64_t>(index.doc_count());
    std::vector<ScoredDoc> docs(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) docs[static_cast<std::size_t>(i)] = {static_cast<std::uint32_t>(i), 0.0};
    // Terms in the same order as rank_serial; within one term every posting
    // names a different document, so the scatter has no conflicts.
    for (const auto& t : tokens) {
        const double idf = index.idf(t);
        const auto& plist = index.postings_for(t);
        const auto m = static_cast<std::int64_t>(plist.size());
#pragma omp parallel for schedule(static) if (m > 4096)
        for (std::int64_t k = 0; k < m; ++k) {
            const Posting& p = plist[static_cast<std::size_t>(k)];
            docs[p.ordinal].score +=
                term_weight(idf, p.tf, index.doc_lengths()[p.ordinal], index.avg_doc_length(), index.params());
        }
    }
    return top_positive(std::move(docs), max_results);
}

std::vector<std::string> search(const SearchIndex& index, const Catalog& catalog, std::string_view query,
                                std::size_t max_results) {
    std::vector<std::string> ids;
    for (const auto& d : rank_parallel(index, query, max_results)) ids.push_back(catalog.at(d.ordinal).id);
    return ids;
}

std::size_t page_count(std::size_t n_results) {
    return std::min(kMaxPages, (n_results + kResultsPerPage - 1) / kResultsPerPage);
}

ResultPage paginate(const std::vector<std::string>& results, std::size_t page_index, const Catalog& catalog,
                    std::string query) {
    if (page_index < 1 || page_index > kMaxPages)
        throw Error(ErrorCode::kInvalidArgument, "page index must be in 1..5");
    ResultPage page;
    page.query = std::move(query);
    page.page_index = page_index;
    page.total_retrieved = std::min(results.size(), kMaxRetrieved);
    const std::size_t begin = (page_index - 1) * kResultsPerPage;
    const std::size_t end = std::min(begin + kResultsPerPage, page.total_retrieved);
    for (std::size_t i = begin; i < end; ++i) {
        const Product* p = catalog.find(results[i]);
        if (!p) throw Error(ErrorCode::kNotFound, "unknown product " + results[i]);
        page.entries.push_back({p->id, p->title, p->price});
    }
    return page;
}

// ---------------------------------------------------------------------------
// Cache file: a small line-oriented text format.

std::string serialize_index(const SearchIndex& index) {
    std::ostringstream out;
    char buf[96];
    out << "webshop-index v1\n";
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", index.params().k1, index.params().b, index.avg_doc_length());
    out << buf;
    out << index.doc_count();
    for (auto len : index.doc_lengths()) out << ' ' << len;
    out << '\n' << index.postings().size() << '\n';
    for (const auto& [token, plist] : index.postings()) {
        out << token << ' ' << plist.size();
        for (const auto& p : plist) out << ' ' << p.ordinal << ':' << p.tf;
        out << '\n';
    }
    return out.str();
}

SearchIndex parse_index(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "webshop-index" || version != "v1")
        throw Error(ErrorCode::kMalformedRecord, "not a webshop index cache");
    SearchIndex index;
    std::size_t n_docs = 0, n_terms = 0;
    if (!(in >> index.params_.k1 >> index.params_.b >> index.avg_doc_length_ >> n_docs))
        throw Error(ErrorCode::kMalformedRecord, "truncated index header");
    index.doc_lengths_.resize(n_docs);
    for (auto& len : index.doc_lengths_)
        if (!(in >> len)) throw Error(ErrorCode::kMalformedRecord, "truncated document lengths");
    if (!(in >> n_terms)) throw Error(ErrorCode::kMalformedRecord, "missing term count");
    for (std::size_t t = 0; t < n_terms; ++t) {
        std::string token;
        std::size_t n = 0;
        if (!(in >> token >> n)) throw Error(ErrorCode::kMalformedRecord, "truncated postings");
        auto& plist = index.postings_[token];
        plist.resize(n);
        for (auto& p : plist) {
            char colon = 0;
            if (!(in >> p.ordinal >> colon >> p.tf) || colon != ':' || p.ordinal >= n_docs)
                throw Error(ErrorCode::kMalformedRecord, "bad posting for '" + token + "'");
        }
    }
    return index;
}

void save_index(const SearchIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << serialize_index(index);
}

SearchIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_index(buf.str());
}

}  // namespace webshop
