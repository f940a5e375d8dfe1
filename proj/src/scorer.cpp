#include "webshop/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webshop/error.hpp"
#include "webshop/rng.hpp"
#include "webshop/text.hpp"

namespace webshop {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double leaky(double x) { return x > 0.0 ? x : CrossAttentionScorer::kLeakySlope * x; }
double leaky_grad(double x) { return x > 0.0 ? 1.0 : CrossAttentionScorer::kLeakySlope; }

/// Forward-pass intermediates kept for the backward pass.
struct Forward {
    std::size_t n_o = 0, n_a = 0, d = 0;
    Matrix alpha;  // n_o x n_a
    Matrix attn;   // softmax over i, per column j
    Matrix c;      // n_a x d
    std::vector<std::size_t> argmax;
    std::vector<double> beta;  // softmax over j of max_i alpha
    std::vector<double> q;
    Matrix x;  // n_a x 4d
    Matrix h;  // n_a x d
    Matrix g;  // n_a x d
    std::vector<double> mean_ca;
    double score = 0.0;
};

Forward forward(const CrossAttentionScorer& s, const TokenIds& obs, const TokenIds& act) {
    if (obs.empty() || act.empty()) throw Error(ErrorCode::kInvalidArgument, "scorer needs non-empty token lists");
    Forward f;
    f.n_o = obs.size();
    f.n_a = act.size();
    const std::size_t d = f.d = s.dim();
    auto o = [&](std::size_t i) { return s.embedding.row(obs[i]); };
    auto a = [&](std::size_t j) { return s.embedding.row(act[j]); };

    std::vector<double> w1o(f.n_o), w2a(f.n_a);
    for (std::size_t i = 0; i < f.n_o; ++i) w1o[i] = dot(s.w1, o(i));
    for (std::size_t j = 0; j < f.n_a; ++j) w2a[j] = dot(s.w2, a(j));

    f.alpha = Matrix(f.n_o, f.n_a);
    for (std::size_t i = 0; i < f.n_o; ++i) {
        auto oi = o(i);
        for (std::size_t j = 0; j < f.n_a; ++j) {
            auto aj = a(j);
            double tri = 0.0;
            for (std::size_t k = 0; k < d; ++k) tri += s.w3[k] * oi[k] * aj[k];
            f.alpha(i, j) = w1o[i] + w2a[j] + tri;
        }
    }

    f.attn = Matrix(f.n_o, f.n_a);
    f.c = Matrix(f.n_a, d);
    f.argmax.assign(f.n_a, 0);
    std::vector<double> maxes(f.n_a);
    for (std::size_t j = 0; j < f.n_a; ++j) {
        double m = f.alpha(0, j);
        for (std::size_t i = 1; i < f.n_o; ++i)
            if (f.alpha(i, j) > m) {
                m = f.alpha(i, j);
                f.argmax[j] = i;
            }
        maxes[j] = m;
        double z = 0.0;
        for (std::size_t i = 0; i < f.n_o; ++i) z += f.attn(i, j) = std::exp(f.alpha(i, j) - m);
        for (std::size_t i = 0; i < f.n_o; ++i) {
            f.attn(i, j) /= z;
            auto oi = o(i);
            for (std::size_t k = 0; k < d; ++k) f.c(j, k) += f.attn(i, j) * oi[k];
        }
    }

    f.beta = softmax(maxes);
    f.q.assign(d, 0.0);
    for (std::size_t j = 0; j < f.n_a; ++j) {
        auto aj = a(j);
        for (std::size_t k = 0; k < d; ++k) f.q[k] += f.beta[j] * aj[k];
    }

    f.x = Matrix(f.n_a, 4 * d);
    f.h = Matrix(f.n_a, d);
    f.g = Matrix(f.n_a, d);
    f.mean_ca.assign(d, 0.0);
    for (std::size_t j = 0; j < f.n_a; ++j) {
        auto aj = a(j);
        auto xj = f.x.row(j);
        for (std::size_t k = 0; k < d; ++k) {
            xj[k] = aj[k];
            xj[d + k] = f.c(j, k);
            xj[2 * d + k] = aj[k] * f.c(j, k);
            xj[3 * d + k] = f.q[k] * f.c(j, k);
        }
        for (std::size_t r = 0; r < d; ++r) {
            f.h(j, r) = dot(s.w4.row(r), xj);
            f.g(j, r) = leaky(f.h(j, r));
        }
        for (std::size_t r = 0; r < d; ++r) f.mean_ca[r] += dot(s.w5.row(r), f.g.row(j));
    }
    for (auto& v : f.mean_ca) v /= static_cast<double>(f.n_a);
    f.score = dot(s.w6, f.mean_ca);
    return f;
}

}  // namespace

ScorerGradient::ScorerGradient(std::size_t dim)
    : w1(dim, 0.0), w2(dim, 0.0), w3(dim, 0.0), w6(dim, 0.0), wv(dim, 0.0), w4(dim, 4 * dim), w5(dim, dim) {}

std::vector<double>& ScorerGradient::embedding_row(std::uint32_t id) {
    auto it = embedding.find(id);
    if (it == embedding.end()) it = embedding.emplace(id, std::vector<double>(w1.size(), 0.0)).first;
    return it->second;
}

void ScorerGradient::add(const ScorerGradient& other, double scale) {
    auto axpy = [scale](std::vector<double>& y, const std::vector<double>& x) {
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += scale * x[k];
    };
    axpy(w1, other.w1);
    axpy(w2, other.w2);
    axpy(w3, other.w3);
    axpy(w6, other.w6);
    axpy(wv, other.wv);
    axpy(w4.data, other.w4.data);
    axpy(w5.data, other.w5.data);
    for (const auto& [id, row] : other.embedding) axpy(embedding_row(id), row);
}

CrossAttentionScorer::CrossAttentionScorer(std::size_t dim, std::size_t vocab_size, double gamma)
    : embedding(vocab_size, dim),
      w1(dim, 0.0),
      w2(dim, 0.0),
      w3(dim, 0.0),
      w6(dim, 0.0),
      wv(dim, 0.0),
      w4(dim, 4 * dim),
      w5(dim, dim),
      dim_(dim),
      vocab_size_(vocab_size),
      gamma_(gamma) {
    if (dim == 0 || vocab_size == 0) throw Error(ErrorCode::kInvalidArgument, "scorer needs dim and vocab > 0");
    if (gamma < 0.0 || gamma > 1.0) throw Error(ErrorCode::kInvalidArgument, "gamma must be in [0, 1]");
}

CrossAttentionScorer CrossAttentionScorer::random(std::size_t dim, std::size_t vocab_size, std::uint64_t seed,
                                                  double scale, double gamma) {
    CrossAttentionScorer s(dim, vocab_size, gamma);
    Rng rng(seed);
    for (double* p : s.parameter_pointers()) *p = rng.uniform(-scale, scale);
    return s;
}

CrossAttentionScorer CrossAttentionScorer::fan_in_init(std::size_t dim, std::size_t vocab_size, std::uint64_t seed,
                                                       double embedding_scale, double gamma) {
    CrossAttentionScorer s(dim, vocab_size, gamma);
    Rng rng(seed);
    auto fill = [&rng](std::span<double> v, double scale) {
        for (double& x : v) x = rng.uniform(-scale, scale);
    };
    const double d = static_cast<double>(dim);
    fill(s.embedding.data, embedding_scale);
    fill(s.w1, std::sqrt(3.0 / d));
    fill(s.w2, std::sqrt(3.0 / d));
    fill(s.w3, std::sqrt(3.0 / d));
    fill(s.w4.data, std::sqrt(3.0 / (4.0 * d)));
    fill(s.w5.data, std::sqrt(3.0 / d));
    fill(s.w6, std::sqrt(3.0 / d));
    return s;
}

std::uint32_t CrossAttentionScorer::token_id(const std::string& token) const {
    return static_cast<std::uint32_t>(fnv1a(token) % vocab_size_);
}

TokenIds CrossAttentionScorer::token_ids(const std::vector<std::string>& tokens) const {
    TokenIds ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(token_id(t));
    return ids;
}

double CrossAttentionScorer::score(const TokenIds& observation, const TokenIds& action) const {
    return forward(*this, observation, action).score;
}

void CrossAttentionScorer::score_backward(const TokenIds& obs, const TokenIds& act, double upstream,
                                          ScorerGradient& grad) const {
    const Forward f = forward(*this, obs, act);
    const std::size_t d = dim_;
    auto o = [&](std::size_t i) { return embedding.row(obs[i]); };
    auto a = [&](std::size_t j) { return embedding.row(act[j]); };

    // S = w6 . mean_ca
    for (std::size_t k = 0; k < d; ++k) grad.w6[k] += upstream * f.mean_ca[k];
    std::vector<double> dca(d);
    for (std::size_t k = 0; k < d; ++k) dca[k] = upstream * w6[k] / static_cast<double>(f.n_a);

    Matrix da(f.n_a, d), dob(f.n_o, d), dc(f.n_a, d), dalpha(f.n_o, f.n_a);
    std::vector<double> dq(d, 0.0);
    std::vector<double> dg(d), dh(d), dx(4 * d);
    for (std::size_t j = 0; j < f.n_a; ++j) {
        // ca_j = W5 g_j
        std::fill(dg.begin(), dg.end(), 0.0);
        for (std::size_t r = 0; r < d; ++r) {
            auto gr = f.g.row(j);
            for (std::size_t k = 0; k < d; ++k) {
                grad.w5(r, k) += dca[r] * gr[k];
                dg[k] += w5(r, k) * dca[r];
            }
        }
        // g = leaky(h), h = W4 x
        for (std::size_t r = 0; r < d; ++r) dh[r] = dg[r] * leaky_grad(f.h(j, r));
        std::fill(dx.begin(), dx.end(), 0.0);
        auto xj = f.x.row(j);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t k = 0; k < 4 * d; ++k) {
                grad.w4(r, k) += dh[r] * xj[k];
                dx[k] += w4(r, k) * dh[r];
            }
        }
        auto aj = a(j);
        for (std::size_t k = 0; k < d; ++k) {
            da(j, k) += dx[k] + dx[2 * d + k] * f.c(j, k);
            dc(j, k) += dx[d + k] + dx[2 * d + k] * aj[k] + dx[3 * d + k] * f.q[k];
            dq[k] += dx[3 * d + k] * f.c(j, k);
        }
    }

    // q = sum_j beta_j a_j, beta = softmax_j(max_i alpha_ij)
    std::vector<double> dbeta(f.n_a);
    double sum_bdb = 0.0;
    for (std::size_t j = 0; j < f.n_a; ++j) {
        auto aj = a(j);
        dbeta[j] = dot(dq, aj);
        sum_bdb += f.beta[j] * dbeta[j];
        for (std::size_t k = 0; k < d; ++k) da(j, k) += f.beta[j] * dq[k];
    }
    for (std::size_t j = 0; j < f.n_a; ++j) dalpha(f.argmax[j], j) += f.beta[j] * (dbeta[j] - sum_bdb);

    // c_j = sum_i attn_ij o_i
    for (std::size_t j = 0; j < f.n_a; ++j) {
        std::vector<double> dp(f.n_o);
        double sum_pdp = 0.0;
        for (std::size_t i = 0; i < f.n_o; ++i) {
            auto oi = o(i);
            dp[i] = dot(dc.row(j), oi);
            sum_pdp += f.attn(i, j) * dp[i];
            for (std::size_t k = 0; k < d; ++k) dob(i, k) += f.attn(i, j) * dc(j, k);
        }
        for (std::size_t i = 0; i < f.n_o; ++i) dalpha(i, j) += f.attn(i, j) * (dp[i] - sum_pdp);
    }

    // alpha_ij = w1.o_i + w2.a_j + w3.(o_i * a_j)
    for (std::size_t i = 0; i < f.n_o; ++i) {
        auto oi = o(i);
        for (std::size_t j = 0; j < f.n_a; ++j) {
            const double g = dalpha(i, j);
            if (g == 0.0) continue;
            auto aj = a(j);
            for (std::size_t k = 0; k < d; ++k) {
                grad.w1[k] += g * oi[k];
                grad.w2[k] += g * aj[k];
                grad.w3[k] += g * oi[k] * aj[k];
                dob(i, k) += g * (w1[k] + w3[k] * aj[k]);
                da(j, k) += g * (w2[k] + w3[k] * oi[k]);
            }
        }
    }

    for (std::size_t i = 0; i < f.n_o; ++i) {
        auto& row = grad.embedding_row(obs[i]);
        for (std::size_t k = 0; k < d; ++k) row[k] += dob(i, k);
    }
    for (std::size_t j = 0; j < f.n_a; ++j) {
        auto& row = grad.embedding_row(act[j]);
        for (std::size_t k = 0; k < d; ++k) row[k] += da(j, k);
    }
}

double CrossAttentionScorer::value(const TokenIds& observation) const {
    if (observation.empty()) throw Error(ErrorCode::kInvalidArgument, "value head needs observation tokens");
    double v = 0.0;
    for (auto id : observation) v += dot(wv, embedding.row(id));
    return v / static_cast<double>(observation.size());
}

void CrossAttentionScorer::value_backward(const TokenIds& observation, double upstream, ScorerGradient& grad) const {
    const double scale = upstream / static_cast<double>(observation.size());
    for (auto id : observation) {
        auto e = embedding.row(id);
        auto& row = grad.embedding_row(id);
        for (std::size_t k = 0; k < dim_; ++k) {
            grad.wv[k] += scale * e[k];
            row[k] += scale * wv[k];
        }
    }
}

void CrossAttentionScorer::apply(const ScorerGradient& grad, double learning_rate) {
    auto step = [learning_rate](std::span<double> p, std::span<const double> g) {
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= learning_rate * g[k];
    };
    step(w1, grad.w1);
    step(w2, grad.w2);
    step(w3, grad.w3);
    step(w6, grad.w6);
    step(wv, grad.wv);
    step(w4.data, grad.w4.data);
    step(w5.data, grad.w5.data);
    for (const auto& [id, row] : grad.embedding) step(embedding.row(id), row);
}

std::vector<double*> CrossAttentionScorer::parameter_pointers() {
    std::vector<double*> out;
    for (auto* v : {&w1, &w2, &w3, &w6, &wv})
        for (double& x : *v) out.push_back(&x);
    for (auto* m : {&w4, &w5})
        for (double& x : m->data) out.push_back(&x);
    for (double& x : embedding.data) out.push_back(&x);
    return out;
}

bool CrossAttentionScorer::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(w1) && finite(w2) && finite(w3) && finite(w6) && finite(wv) && finite(w4.data) &&
           finite(w5.data) && finite(embedding.data);
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) z += p[k] = std::exp(logits[k] - m);
    for (auto& v : p) v /= z;
    return p;
}

ScoredActions policy_distribution(const CrossAttentionScorer& scorer, const TokenIds& observation,
                                  const std::vector<TokenIds>& actions) {
    if (actions.empty()) throw Error(ErrorCode::kInvalidArgument, "policy needs at least one legal action");
    ScoredActions out;
    out.scores.reserve(actions.size());
    for (const auto& a : actions) out.scores.push_back(scorer.score(observation, a));
    out.probs = softmax(out.scores);
    return out;
}

// ---------------------------------------------------------------------------

std::string checkpoint_to_json(const CrossAttentionScorer& s) {
    nlohmann::ordered_json j;
    j["format"] = "webshop-scorer";
    j["version"] = kCheckpointVersion;
    j["dim"] = s.dim();
    j["vocab_size"] = s.vocab_size();
    j["gamma"] = s.gamma();
    j["w1"] = s.w1;
    j["w2"] = s.w2;
    j["w3"] = s.w3;
    j["w4"] = s.w4.data;
    j["w5"] = s.w5.data;
    j["w6"] = s.w6;
    j["wv"] = s.wv;
    j["embedding"] = s.embedding.data;
    return j.dump();
}

CrossAttentionScorer checkpoint_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "webshop-scorer")
            throw Error(ErrorCode::kMalformedRecord, "not a scorer checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw Error(ErrorCode::kMalformedRecord, "unsupported checkpoint version");
        const auto d = j.at("dim").get<std::size_t>();
        const auto v = j.at("vocab_size").get<std::size_t>();
        CrossAttentionScorer s(d, v, j.at("gamma").get<double>());
        auto load = [&](const char* key, std::vector<double>& dst) {
            auto src = j.at(key).get<std::vector<double>>();
            if (src.size() != dst.size()) throw Error(ErrorCode::kMalformedRecord, std::string("bad shape for ") + key);
            dst = std::move(src);
        };
        load("w1", s.w1);
        load("w2", s.w2);
        load("w3", s.w3);
        load("w4", s.w4.data);
        load("w5", s.w5.data);
        load("w6", s.w6);
        load("wv", s.wv);
        load("embedding", s.embedding.data);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("bad checkpoint: ") + e.what());
    }
}

void save_checkpoint(const CrossAttentionScorer& scorer, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << checkpoint_to_json(scorer);
}

CrossAttentionScorer load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kNotFound, "missing checkpoint " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

}  // namespace webshop
