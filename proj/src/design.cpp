// Copyright 2026 The pmdp-verify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmdpv/design.hpp"

#include "pmdpv/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace pmdpv {

namespace {

constexpr std::size_t kTruncatedMeanSamples = 4096;
constexpr std::size_t kTruncatedMeanAttempts = 10000;
constexpr double kValueTol = 1e-14;

using PosteriorKey = std::vector<double>;

PosteriorKey key_of(const Posterior& p) {
    PosteriorKey k;
    k.reserve(2 * p.params.size());
    for (const auto& b : p.params) {
        k.push_back(b.a);
        k.push_back(b.b);
    }
    return k;
}

void check_context(const DesignContext& ctx, const Posterior& p) {
    if (!ctx.model || !ctx.expanded || !ctx.region.map)
        throw ValidationError("design needs a model, its expansion and a region map");
    if (p.params.size() != ctx.model->num_params())
        throw ValidationError("posterior has " + std::to_string(p.params.size()) + " parameters, model has " +
                              std::to_string(ctx.model->num_params()));
}

bool within(double x, double best, double tol) {
    return x >= best - tol * std::max(1.0, std::abs(best));
}

// Caches predicted confidence by the posterior it is computed from.
class ConfidenceCache {
public:
    ConfidenceCache(const DesignContext& ctx, Integration how, const DesignOptions& opt)
        : ctx_(ctx), how_(how), opt_(opt) {}

    double operator()(const Posterior& p) {
        auto key = key_of(p);
        auto it = memo_.find(key);
        if (it != memo_.end())
            return it->second;
        double c = posterior_confidence(ctx_, p, how_, opt_);
        memo_.emplace(std::move(key), c);
        return c;
    }
    std::size_t size() const noexcept { return memo_.size(); }

private:
    const DesignContext& ctx_;
    Integration how_;
    const DesignOptions& opt_;
    std::map<PosteriorKey, double> memo_;
};

PredictedCounts finish_counts(const DesignContext& ctx, std::vector<double> theta, std::vector<double> edges,
                              std::vector<double> totals) {
    PredictedCounts out;
    auto expanded = apportion_counts(*ctx.expanded, edges, theta);
    out.params = parameter_counts<double>(ctx.expanded->model, std::span<const double>(expanded));
    out.theta = std::move(theta);
    out.edges = std::move(edges);
    out.step_totals = std::move(totals);
    return out;
}

PredictedCounts propagate(const DesignContext& ctx, const Mdp& mdp, const std::vector<double>& theta,
                          const Strategy& pi, std::size_t n) {
    const Pmdp& m = *ctx.model;
    std::vector<double> dist(m.num_states(), 0.0);
    for (const auto& [s, w] : mdp.initial())
        dist[s] += w;
    std::vector<double> edges(m.num_edges(), 0.0);
    std::vector<double> totals;
    totals.reserve(n);
    std::vector<double> next(m.num_states());
    for (std::size_t t = 0; t < n; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        double total = 0.0;
        for (std::size_t s = 0; s < m.num_states(); ++s) {
            if (dist[s] == 0.0)
                continue;
            const std::size_t c = pi.choice[s];
            const auto& row = mdp.choices(s)[c].transitions;
            for (std::size_t k = 0; k < row.size(); ++k) {
                const double w = dist[s] * row[k].prob;
                edges[m.edge_id(s, c, k)] += w;
                next[row[k].target] += w;
                total += w;
            }
        }
        totals.push_back(total);
        dist.swap(next);
    }
    return finish_counts(ctx, theta, std::move(edges), std::move(totals));
}

PredictedCounts one_step(const DesignContext& ctx, const Mdp& mdp, const std::vector<double>& theta, std::size_t s,
                         std::size_t c) {
    const Pmdp& m = *ctx.model;
    std::vector<double> edges(m.num_edges(), 0.0);
    const auto& row = mdp.choices(s)[c].transitions;
    double total = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        edges[m.edge_id(s, c, k)] = row[k].prob;
        total += row[k].prob;
    }
    return finish_counts(ctx, theta, std::move(edges), {total});
}

void check_strategy(const Pmdp& m, const Strategy& pi) {
    if (pi.choice.size() != m.num_states())
        throw ValidationError("strategy does not cover every state");
    for (std::size_t s = 0; s < m.num_states(); ++s)
        if (pi.choice[s] >= m.choices(s).size())
            throw ValidationError("strategy picks a disabled action at state " + m.state(s).name);
}

// Mixed-radix decoding; the last free state varies fastest.
Strategy decode(const Pmdp& m, const std::vector<std::size_t>& free, std::size_t index) {
    Strategy pi{std::vector<std::size_t>(m.num_states(), 0)};
    for (std::size_t i = free.size(); i-- > 0;) {
        const std::size_t radix = m.choices(free[i]).size();
        pi.choice[free[i]] = index % radix;
        index /= radix;
    }
    return pi;
}

nlohmann::ordered_json strategy_json(const Strategy& s, const Pmdp& m) {
    return nlohmann::ordered_json::parse(strategy_to_json(s, m));
}

} // namespace

std::vector<double> expected_param_values(const Posterior& p) {
    return p.means();
}

std::vector<double> design_point(const Pmdp& m, const Posterior& p, std::uint64_t seed) {
    if (p.params.size() != m.num_params())
        throw ValidationError("posterior does not match the model parameters");
    auto mean = expected_param_values(p);
    const auto space = m.param_space();
    if (space.contains(mean))
        return mean;
    std::vector<double> acc(mean.size(), 0.0);
    std::vector<double> theta(mean.size());
    const std::uint64_t base = derive_seed(seed, {0x7472756e63ULL});
    for (std::size_t i = 0; i < kTruncatedMeanSamples; ++i) {
        Rng rng(base, i);
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt >= kTruncatedMeanAttempts)
                throw NumericError("posterior has almost no mass on valid parameters");
            for (std::size_t j = 0; j < theta.size(); ++j)
                theta[j] = rng.beta(p.params[j].a, p.params[j].b);
            if (space.contains(theta))
                break;
        }
        for (std::size_t j = 0; j < theta.size(); ++j)
            acc[j] += theta[j];
    }
    for (auto& x : acc)
        x /= static_cast<double>(kTruncatedMeanSamples);
    return acc;
}

PredictedCounts expected_trace_counts(const DesignContext& ctx, const Strategy& pi, const Posterior& p,
                                      std::size_t n, std::uint64_t seed) {
    check_context(ctx, p);
    check_strategy(*ctx.model, pi);
    if (n == 0)
        throw ValidationError("trace length must be at least 1");
    auto theta = design_point(*ctx.model, p, seed);
    return propagate(ctx, instantiate(*ctx.model, theta), theta, pi, n);
}

PredictedCounts expected_step_counts(const DesignContext& ctx, std::size_t s, std::size_t c, const Posterior& p,
                                     std::uint64_t seed) {
    check_context(ctx, p);
    if (s >= ctx.model->num_states() || c >= ctx.model->choices(s).size())
        throw ValidationError("no such state-action pair");
    auto theta = design_point(*ctx.model, p, seed);
    return one_step(ctx, instantiate(*ctx.model, theta), theta, s, c);
}

Posterior predicted_posterior(const Posterior& p, const PredictedCounts& predicted) {
    for (std::size_t j = 0; j < predicted.params.pos.size(); ++j)
        if (predicted.params.pos[j] < 0.0 || predicted.params.neg[j] < 0.0)
            throw ValidationError("predicted counts must be nonnegative");
    return update_posterior(p, predicted.params);
}

double posterior_confidence(const DesignContext& ctx, const Posterior& p, Integration how,
                            const DesignOptions& opt) {
    if (how == Integration::Exact)
        return confidence_exact(ctx.region, p).c;
    ConfidenceOptions co;
    co.samples = opt.mc_samples;
    co.seed = opt.seed;
    co.threads = opt.threads;
    return confidence(ctx.region, p, co).c;
}

double predicted_confidence(const DesignContext& ctx, const Posterior& p, const PredictedCounts& predicted,
                            Integration how, const DesignOptions& opt) {
    return posterior_confidence(ctx, predicted_posterior(p, predicted), how, opt);
}

std::size_t strategy_count(const Pmdp& m) {
    std::size_t n = 1;
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        const std::size_t k = m.choices(s).size();
        if (n > std::numeric_limits<std::size_t>::max() / k)
            return std::numeric_limits<std::size_t>::max();
        n *= k;
    }
    return n;
}

GainReport synthesise_strategy(const DesignContext& ctx, const Posterior& p, const DesignOptions& opt) {
    check_context(ctx, p);
    const Pmdp& m = *ctx.model;
    if (opt.trace_length == 0)
        throw ValidationError("trace length must be at least 1");
    const std::size_t count = strategy_count(m);
    if (count > opt.max_strategies)
        throw LimitError("model has " + (count == std::numeric_limits<std::size_t>::max()
                                             ? std::string("too many")
                                             : std::to_string(count)) +
                         " memoryless strategies, above the enumeration cap of " +
                         std::to_string(opt.max_strategies) + "; use the offline DP mode instead");
    std::vector<std::size_t> free;
    for (std::size_t s = 0; s < m.num_states(); ++s)
        if (m.choices(s).size() > 1)
            free.push_back(s);

    const auto theta = design_point(m, p, opt.seed);
    const Mdp mdp = instantiate(m, theta);
    ConfidenceCache cache(ctx, opt.synth_integration, opt);

    GainReport r;
    r.c_current = cache(p);
    r.strategies = count;
    std::vector<double> c_hat(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto pi = decode(m, free, i);
        c_hat[i] = cache(predicted_posterior(p, propagate(ctx, mdp, theta, pi, opt.trace_length)));
    }
    r.distinct = cache.size();

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i)
        best = std::max(best, confidence_gain(c_hat[i], r.c_current));
    bool found = false;
    for (std::size_t i = 0; i < count; ++i) {
        const double g = confidence_gain(c_hat[i], r.c_current);
        if (!within(g, best, opt.tie_tol))
            continue;
        auto pi = decode(m, free, i);
        if (!found) {
            r.chosen = pi;
            r.c_hat = c_hat[i];
            r.gain = g;
            found = true;
        }
        r.tied.push_back(std::move(pi));
    }
    if (count <= opt.report_limit) {
        r.evaluated.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            r.evaluated.push_back({decode(m, free, i), c_hat[i], confidence_gain(c_hat[i], r.c_current)});
    }
    return r;
}

DpReport offline_dp_strategy(const DesignContext& ctx, const Posterior& p, const DesignOptions& opt) {
    check_context(ctx, p);
    if (!(opt.discount > 0.0 && opt.discount < 1.0))
        throw ValidationError("discount must lie strictly between 0 and 1");
    const Pmdp& m = *ctx.model;
    const auto theta = design_point(m, p, opt.seed);
    const Mdp mdp = instantiate(m, theta);
    ConfidenceCache cache(ctx, opt.dp_integration, opt);

    DpReport r;
    r.c_current = cache(p);
    const std::size_t n = m.num_states();
    r.rewards.resize(n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t c = 0; c < m.choices(s).size(); ++c)
            r.rewards[s].push_back(
                confidence_gain(cache(predicted_posterior(p, one_step(ctx, mdp, theta, s, c))), r.c_current));

    auto backup = [&](const std::vector<double>& v, std::size_t s, std::size_t c) {
        double acc = 0.0;
        for (const auto& tr : mdp.choices(s)[c].transitions)
            acc += tr.prob * v[tr.target];
        return r.rewards[s][c] + opt.discount * acc;
    };
    // Jacobi sweeps keep the iterates independent of state order.
    std::vector<double> v(n, 0.0);
    std::vector<double> next(n);
    for (;;) {
        if (r.iterations >= opt.max_iterations)
            throw NumericError("discounted value iteration did not converge in " +
                               std::to_string(opt.max_iterations) + " iterations");
        ++r.iterations;
        double diff = 0.0;
        double scale = 1.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < m.choices(s).size(); ++c)
                best = std::max(best, backup(v, s, c));
            next[s] = best;
            diff = std::max(diff, std::abs(best - v[s]));
            scale = std::max(scale, std::abs(best));
        }
        v.swap(next);
        if (diff <= kValueTol * scale)
            break;
    }
    r.values = v;
    r.q.resize(n);
    r.ties.resize(n);
    r.chosen.choice.assign(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < m.choices(s).size(); ++c) {
            r.q[s].push_back(backup(v, s, c));
            best = std::max(best, r.q[s].back());
        }
        std::vector<std::size_t> top;
        for (std::size_t c = 0; c < r.q[s].size(); ++c)
            if (within(r.q[s][c], best, opt.tie_tol))
                top.push_back(c);
        r.chosen.choice[s] = top.front();
        if (top.size() > 1)
            r.ties[s] = std::move(top);
    }
    return r;
}

namespace {

double reference_value(const DesignContext& ctx, const Posterior& p, std::size_t s, std::size_t t,
                       std::size_t horizon, const DesignOptions& opt, std::size_t* arg) {
    if (t >= horizon)
        return 0.0;
    const Pmdp& m = *ctx.model;
    const auto theta = design_point(m, p, opt.seed);
    const Mdp mdp = instantiate(m, theta);
    const double c = posterior_confidence(ctx, p, Integration::Exact, opt);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
        const Posterior next = predicted_posterior(p, one_step(ctx, mdp, theta, s, a));
        double value = confidence_gain(posterior_confidence(ctx, next, Integration::Exact, opt), c);
        for (const auto& tr : mdp.choices(s)[a].transitions)
            if (tr.prob > 0.0)
                value += tr.prob * reference_value(ctx, next, tr.target, t + 1, horizon, opt, nullptr);
        if (value > best) {
            best = value;
            if (arg)
                *arg = a;
        }
    }
    return best;
}

} // namespace

ReferenceGain reference_gain(const DesignContext& ctx, const Posterior& p, std::size_t horizon,
                             const DesignOptions& opt) {
    check_context(ctx, p);
    if (horizon == 0 || horizon > 3)
        throw LimitError("the reference evaluator supports horizons 1 to 3");
    const auto& init = ctx.model->initial();
    if (init.size() != 1)
        throw ValidationError("the reference evaluator needs a single initial state");
    ReferenceGain g;
    g.value = reference_value(ctx, p, init.front().first, 0, horizon, opt, &g.first_choice);
    return g;
}

std::string gain_report_to_json(const GainReport& r, const Pmdp& m) {
    nlohmann::ordered_json doc;
    doc["mode"] = "synth";
    doc["strategy"] = strategy_json(r.chosen, m);
    doc["c_current"] = r.c_current;
    doc["c_hat"] = r.c_hat;
    doc["gain"] = r.gain;
    doc["strategies"] = r.strategies;
    doc["distinct_posteriors"] = r.distinct;
    auto ties = nlohmann::ordered_json::array();
    for (const auto& s : r.tied)
        ties.push_back(strategy_json(s, m));
    doc["tied"] = std::move(ties);
    auto rows = nlohmann::ordered_json::array();
    for (const auto& e : r.evaluated)
        rows.push_back({{"strategy", strategy_json(e.strategy, m)}, {"c_hat", e.c_hat}, {"gain", e.gain}});
    doc["evaluated"] = std::move(rows);
    return doc.dump(2) + "\n";
}

std::string dp_report_to_json(const DpReport& r, const Pmdp& m) {
    nlohmann::ordered_json doc;
    doc["mode"] = "dp";
    doc["strategy"] = strategy_json(r.chosen, m);
    doc["c_current"] = r.c_current;
    doc["iterations"] = r.iterations;
    auto states = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        nlohmann::ordered_json st;
        st["state"] = m.state(s).name;
        st["value"] = r.values[s];
        auto acts = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < m.choices(s).size(); ++c)
            acts.push_back({{"action", m.actions()[m.choices(s)[c].action]},
                            {"reward", r.rewards[s][c]},
                            {"q", r.q[s][c]}});
        st["actions"] = std::move(acts);
        auto ties = nlohmann::ordered_json::array();
        for (auto c : r.ties[s])
            ties.push_back(m.actions()[m.choices(s)[c].action]);
        st["ties"] = std::move(ties);
        states.push_back(std::move(st));
    }
    doc["states"] = std::move(states);
    return doc.dump(2) + "\n";
}

} // namespace pmdpv
