#pragma once

// Central-difference gradient checking against the tape's analytic pass.
// Meant to run at 64-bit precision; finite differences are unreliable at 32.

#include <cmath>
#include <string>
#include <vector>

#include "cmpc/graph.hpp"

namespace cmpc {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tol = 1e-4;
    bool pass = true;

    const GradCheckEntry* worst() const {
        const GradCheckEntry* w = nullptr;
        for (const auto& e : entries)
            if (!w || e.max_rel_err > w->max_rel_err) w = &e;
        return w;
    }
};

inline double grad_rel_err(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return diff / denom;
}

/// build must construct the loss through a Graph bound to `params` and
/// return the scalar loss node. It is re-invoked on a fresh graph for every
/// perturbed evaluation, so it has to be a pure function of the store.
template <class T, class BuildFn>
GradCheckReport check_gradients(ParamStore<T>& params, BuildFn&& build, T eps = T(1e-5), double tol = 1e-4,
                                std::vector<std::string> subset = {}) {
    GradCheckReport report;
    report.tol = tol;

    Graph<T> g(&params);
    const int loss = build(g);
    const auto analytic = g.backward(loss);

    auto eval = [&]() {
        Graph<T> h(&params);
        return static_cast<double>(h.value(build(h))[0]);
    };

    if (subset.empty())
        for (const auto& [name, t] : params.tensors()) subset.push_back(name);

    for (const auto& name : subset) {
        Tensor<T>& theta = params.mutable_at(name);
        const Tensor<T>& a = analytic.at(name);
        GradCheckEntry entry;
        entry.name = name;
        for (std::int64_t i = 0; i < theta.size(); ++i) {
            const T saved = theta[i];
            theta[i] = saved + eps;
            const double lp = eval();
            theta[i] = saved - eps;
            const double lm = eval();
            theta[i] = saved;
            const double numeric = (lp - lm) / (2.0 * static_cast<double>(eps));
            const double err = grad_rel_err(static_cast<double>(a[i]), numeric);
            if (err > entry.max_rel_err) {
                entry.max_rel_err = err;
                entry.worst_index = i;
                entry.analytic = static_cast<double>(a[i]);
                entry.numeric = numeric;
            }
        }
        if (entry.max_rel_err > tol) report.pass = false;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace cmpc
