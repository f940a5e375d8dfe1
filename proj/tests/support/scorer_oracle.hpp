#pragma once

// Naive re-derivation of the cross-attention score, written from the
// formulas without sharing code with the library, plus a finite-difference
// gradient checker.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "webshop/scorer.hpp"

namespace fixtures {

/// Score, optionally recording which branch every non-smooth piece took:
/// the argmax row of each max_i alpha_ij and the sign of each leaky-ReLU
/// input.
inline double reference_score(const webshop::CrossAttentionScorer& s, const webshop::TokenIds& obs,
                              const webshop::TokenIds& act, std::vector<int>* branches = nullptr) {
    const std::size_t d = s.dim();
    auto emb = [&](std::uint32_t id) {
        std::vector<double> v(d);
        for (std::size_t k = 0; k < d; ++k) v[k] = s.embedding(id, k);
        return v;
    };
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double t = 0;
        for (std::size_t k = 0; k < a.size(); ++k) t += a[k] * b[k];
        return t;
    };
    std::vector<std::vector<double>> o, a;
    for (auto id : obs) o.push_back(emb(id));
    for (auto id : act) a.push_back(emb(id));
    const std::size_t n = o.size(), m = a.size();

    std::vector<std::vector<double>> alpha(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> prod(d);
            for (std::size_t k = 0; k < d; ++k) prod[k] = o[i][k] * a[j][k];
            alpha[i][j] = dot(s.w1, o[i]) + dot(s.w2, a[j]) + dot(s.w3, prod);
        }

    std::vector<std::vector<double>> c(m, std::vector<double>(d, 0.0));
    std::vector<double> colmax(m);
    for (std::size_t j = 0; j < m; ++j) {
        double mx = alpha[0][j];
        int arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (alpha[i][j] > mx) mx = alpha[i][j], arg = static_cast<int>(i);
        if (branches) branches->push_back(arg);
        colmax[j] = mx;
        double z = 0;
        for (std::size_t i = 0; i < n; ++i) z += std::exp(alpha[i][j] - mx);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) c[j][k] += std::exp(alpha[i][j] - mx) / z * o[i][k];
    }
    std::vector<double> q(d, 0.0);
    {
        double mx = *std::max_element(colmax.begin(), colmax.end());
        double z = 0;
        for (double v : colmax) z += std::exp(v - mx);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < d; ++k) q[k] += std::exp(colmax[j] - mx) / z * a[j][k];
    }
    std::vector<double> mean_ca(d, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> x;
        for (std::size_t k = 0; k < d; ++k) x.push_back(a[j][k]);
        for (std::size_t k = 0; k < d; ++k) x.push_back(c[j][k]);
        for (std::size_t k = 0; k < d; ++k) x.push_back(a[j][k] * c[j][k]);
        for (std::size_t k = 0; k < d; ++k) x.push_back(q[k] * c[j][k]);
        std::vector<double> h(d);
        for (std::size_t r = 0; r < d; ++r) {
            double t = 0;
            for (std::size_t k = 0; k < 4 * d; ++k) t += s.w4(r, k) * x[k];
            if (branches) branches->push_back(t > 0 ? -1 : -2);
            h[r] = t > 0 ? t : 0.01 * t;
        }
        for (std::size_t r = 0; r < d; ++r) {
            double t = 0;
            for (std::size_t k = 0; k < d; ++k) t += s.w5(r, k) * h[k];
            mean_ca[r] += t / static_cast<double>(m);
        }
    }
    return dot(s.w6, mean_ca);
}

/// True when moving any single parameter by +-eps changes a branch of the
/// score (a leaky-ReLU sign or a max_i alpha_ij argmax) for one of the
/// pairs: the loss is not differentiable across that step and a central
/// difference does not estimate the derivative there.
inline bool crosses_kink(webshop::CrossAttentionScorer scorer,
                         const std::vector<std::pair<webshop::TokenIds, webshop::TokenIds>>& pairs, double eps) {
    auto signs = [&](const webshop::CrossAttentionScorer& s) {
        std::vector<int> out;
        for (const auto& [o, a] : pairs) reference_score(s, o, a, &out);
        return out;
    };
    const auto base = signs(scorer);
    for (double* p : scorer.parameter_pointers()) {
        const double saved = *p;
        for (double delta : {eps, -eps}) {
            *p = saved + delta;
            if (signs(scorer) != base) return true;
        }
        *p = saved;
    }
    return false;
}

/// Flat gradient in parameter_pointers() order.
inline std::vector<double> flatten(const webshop::CrossAttentionScorer& shape, const webshop::ScorerGradient& grad) {
    webshop::CrossAttentionScorer holder(shape.dim(), shape.vocab_size(), shape.gamma());
    holder.apply(grad, -1.0);
    std::vector<double> out;
    for (double* p : holder.parameter_pointers()) out.push_back(*p);
    return out;
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Central differences over every parameter. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor); the floor keeps
/// parameters with vanishing gradient from dividing roundoff by zero.
inline GradCheckResult check_gradient(webshop::CrossAttentionScorer scorer, const std::vector<double>& analytic,
                                      const std::function<double(const webshop::CrossAttentionScorer&)>& loss,
                                      double eps = 1e-4, double floor = 1e-6) {
    GradCheckResult r;
    auto params = scorer.parameter_pointers();
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = *params[k];
        *params[k] = saved + eps;
        const double up = loss(scorer);
        *params[k] = saved - eps;
        const double down = loss(scorer);
        *params[k] = saved;
        const double numeric = (up - down) / (2 * eps);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
        r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic[k] - numeric) / denom);
        ++r.checked;
    }
    return r;
}

}  // namespace fixtures
