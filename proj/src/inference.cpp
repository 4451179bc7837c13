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

#include "pmdpv/inference.hpp"

#include "pmdpv/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pmdpv {

namespace {

std::optional<std::size_t> find_edge(const Pmdp& m, const Step& st) {
    auto c = m.find_choice(st.state, st.action);
    if (!c)
        return std::nullopt;
    const auto& tr = m.choices(st.state)[*c].transitions;
    for (std::size_t k = 0; k < tr.size(); ++k)
        if (tr[k].target == st.next)
            return m.edge_id(st.state, *c, k);
    return std::nullopt;
}

std::string describe(const Pmdp& m, const Step& st) {
    return "(" + m.state(st.state).name + ", " + m.actions()[st.action] + ", " + m.state(st.next).name + ")";
}

} // namespace

TraceData parse_traces(std::string_view text, const Pmdp& m) {
    TraceData out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == text.size())
                break;
            continue;
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line.begin(), line.end());
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("trace is not valid JSON: ") + e.what(), static_cast<int>(line_no),
                             static_cast<int>(e.byte));
        }
        Trace t;
        try {
            for (const auto& step : doc.at("steps")) {
                if (!step.is_array() || step.size() != 3)
                    throw ParseError("each step must be [state, action, next]", static_cast<int>(line_no));
                auto lookup_state = [&](const nlohmann::json& v) {
                    auto s = m.find_state(v.get<std::string>());
                    if (!s)
                        throw ValidationError("trace line " + std::to_string(line_no) + ": unknown state '" +
                                              v.get<std::string>() + "'");
                    return *s;
                };
                auto a = m.find_action(step[1].get<std::string>());
                if (!a)
                    throw ValidationError("trace line " + std::to_string(line_no) + ": unknown action '" +
                                          step[1].get<std::string>() + "'");
                t.steps.push_back(Step{lookup_state(step[0]), *a, lookup_state(step[2])});
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed trace: ") + e.what(), static_cast<int>(line_no));
        }
        out.push_back(std::move(t));
        if (end == text.size())
            break;
    }
    validate_traces(out, m);
    return out;
}

TraceData load_traces(const std::string& path, const Pmdp& m) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open trace file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_traces(buf.str(), m);
}

std::string traces_to_jsonl(const TraceData& traces, const Pmdp& m) {
    std::string out;
    for (const auto& t : traces) {
        out += "{\"steps\":[";
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            const auto& st = t.steps[i];
            nlohmann::json step = {m.state(st.state).name, m.actions()[st.action], m.state(st.next).name};
            if (i > 0)
                out += ',';
            out += step.dump();
        }
        out += "]}\n";
    }
    return out;
}

void validate_traces(const TraceData& traces, const Pmdp& m) {
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& steps = traces[i].steps;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const auto& st = steps[k];
            std::string where = "trace " + std::to_string(i) + " step " + std::to_string(k);
            if (st.state >= m.num_states() || st.next >= m.num_states() || st.action >= m.actions().size())
                throw ValidationError(where + ": index out of range");
            if (!m.find_choice(st.state, st.action))
                throw ValidationError(where + ": action '" + m.actions()[st.action] + "' not enabled at '" +
                                      m.state(st.state).name + "'");
            auto e = find_edge(m, st);
            if (!e || m.transition(*e).prob.is_zero())
                throw ValidationError(where + ": transition " + describe(m, st) +
                                      " has probability zero in the model");
            if (k > 0 && steps[k - 1].next != st.state)
                throw ValidationError(where + ": does not continue from '" + m.state(steps[k - 1].next).name + "'");
        }
    }
}

std::vector<std::int64_t> extract_counts(const Pmdp& m, const TraceData& traces) {
    validate_traces(traces, m);
    std::vector<std::int64_t> counts(m.num_edges(), 0);
    for (const auto& t : traces)
        for (const auto& st : t.steps)
            ++counts[*find_edge(m, st)];
    return counts;
}

template <class T>
ParamCounts<T> parameter_counts(const Pmdp& m, std::span<const T> edge_counts) {
    if (edge_counts.size() != m.num_edges())
        throw ValidationError("edge count vector does not match the model");
    ParamCounts<T> out{std::vector<T>(m.num_params(), T{}), std::vector<T>(m.num_params(), T{})};
    std::vector<std::size_t> params;
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        auto row = m.choices(s);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto& trs = row[c].transitions;
            params.clear();
            for (const auto& t : trs)
                if (auto j = t.prob.as_parameter())
                    params.push_back(*j);
            if (params.empty())
                continue;
            for (std::size_t k = 0; k < trs.size(); ++k) {
                const T n = edge_counts[m.edge_id(s, c, k)];
                auto own = trs[k].prob.as_parameter();
                for (auto j : params) {
                    if (own && *own == j)
                        out.pos[j] += n;
                    else
                        out.neg[j] += n;
                }
            }
        }
    }
    return out;
}

template ParamCounts<std::int64_t> parameter_counts(const Pmdp&, std::span<const std::int64_t>);
template ParamCounts<double> parameter_counts(const Pmdp&, std::span<const double>);

Posterior Posterior::prior_of(const Pmdp& m) { return Posterior{m.parameter_names(), m.priors()}; }

std::vector<double> Posterior::means() const {
    std::vector<double> out;
    for (const auto& b : params)
        out.push_back(b.mean());
    return out;
}

Posterior update_posterior(const Posterior& prior, const ParamCounts<double>& counts) {
    if (counts.pos.size() != prior.params.size() || counts.neg.size() != prior.params.size())
        throw ValidationError("count vector does not match the posterior");
    Posterior out = prior;
    for (std::size_t j = 0; j < out.params.size(); ++j) {
        if (counts.pos[j] < 0 || counts.neg[j] < 0)
            throw ValidationError("counts must be nonnegative");
        out.params[j].a += counts.pos[j];
        out.params[j].b += counts.neg[j];
    }
    return out;
}

Posterior update_posterior(const Posterior& prior, const ParamCounts<std::int64_t>& counts) {
    ParamCounts<double> d;
    for (auto v : counts.pos)
        d.pos.push_back(static_cast<double>(v));
    for (auto v : counts.neg)
        d.neg.push_back(static_cast<double>(v));
    return update_posterior(prior, d);
}

std::string posterior_to_json(const Posterior& p) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < p.params.size(); ++j)
        doc[p.names[j]] = {p.params[j].a, p.params[j].b};
    return doc.dump() + "\n";
}

Posterior posterior_from_json(std::string_view text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("posterior is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ValidationError("posterior must be a JSON object {param: [mu1, mu2]}");
    Posterior p;
    for (const auto& [name, v] : doc.items()) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ValidationError("posterior entry '" + name + "' must be [mu1, mu2]");
        BetaPair b{v[0].get<double>(), v[1].get<double>()};
        if (!(b.a > 0 && b.b > 0))
            throw ValidationError("posterior hyperparameters of '" + name + "' must be positive");
        p.names.push_back(name);
        p.params.push_back(b);
    }
    return p;
}

std::vector<double> apportion_counts(const ExpandedModel& e, std::span<const double> original_counts,
                                     std::span<const double> theta) {
    if (original_counts.size() != e.lineage.size())
        throw ValidationError("count vector does not match the original model");
    std::vector<double> out(e.model.num_edges(), 0.0);
    std::vector<double> w;
    for (std::size_t id = 0; id < e.lineage.size(); ++id) {
        const double n = original_counts[id];
        if (n == 0.0)
            continue;
        const auto& paths = e.lineage[id];
        if (paths.empty())
            throw ValidationError("counts observed on an edge removed by expansion");
        w.assign(paths.size(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < paths.size(); ++i)
            total += w[i] = e.path_probability(paths[i], theta);
        for (std::size_t i = 0; i < paths.size(); ++i) {
            double share = paths.size() == 1 ? n : (total > 0.0 ? n * w[i] / total : 0.0);
            for (auto edge : paths[i])
                out[edge] += share;
        }
    }
    return out;
}

CompletionSampler::CompletionSampler(const ExpandedModel& expanded, std::vector<std::int64_t> counts,
                                     Posterior prior, CompletionOptions opt)
    : expanded_(expanded), counts_(std::move(counts)), prior_(std::move(prior)), opt_(opt) {
    if (counts_.size() != expanded_.lineage.size())
        throw ValidationError("count vector does not match the original model");
    if (prior_.params.size() != expanded_.model.num_params())
        throw ValidationError("prior does not match the model parameters");
    for (auto n : counts_)
        if (n < 0)
            throw ValidationError("counts must be nonnegative");
    std::vector<double> observed(counts_.begin(), counts_.end());
    std::vector<double> theta = prior_.means();
    pilot_ = prior_;
    const std::size_t iters = expanded_.is_identity() ? 1 : std::max<std::size_t>(1, opt_.pilot_iterations);
    for (std::size_t it = 0; it < iters; ++it) {
        auto expected = apportion_counts(expanded_, observed, theta);
        pilot_ = update_posterior(prior_, parameter_counts<double>(expanded_.model, expected));
        theta = pilot_.means();
    }
}

std::vector<std::int64_t> CompletionSampler::split_counts(std::span<const double> theta_hat, Rng& rng) const {
    std::vector<std::int64_t> out(expanded_.model.num_edges(), 0);
    std::vector<double> w;
    for (std::size_t id = 0; id < expanded_.lineage.size(); ++id) {
        const std::int64_t n = counts_[id];
        if (n == 0)
            continue;
        const auto& paths = expanded_.lineage[id];
        if (paths.empty())
            throw ValidationError("counts observed on an edge removed by expansion");
        if (paths.size() == 1) {
            for (auto edge : paths[0])
                out[edge] += n;
            continue;
        }
        w.assign(paths.size(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < paths.size(); ++i)
            total += w[i] = expanded_.path_probability(paths[i], theta_hat);
        if (!(total > 0.0))
            return {};
        // Multinomial split as a chain of binomials.
        std::int64_t rest = n;
        double rest_w = total;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            std::int64_t x;
            if (i + 1 == paths.size() || rest == 0)
                x = rest;
            else if (rest_w - w[i] <= 1e-15 * total)
                x = rest;
            else
                x = rng.binomial(rest, std::clamp(w[i] / rest_w, 0.0, 1.0));
            rest -= x;
            rest_w -= w[i];
            for (auto edge : paths[i])
                out[edge] += x;
        }
    }
    return out;
}

CompletionSample CompletionSampler::sample(Rng& rng) const {
    const std::size_t k = prior_.params.size();
    std::vector<double> theta_hat(k);
    CompletionSample s;
    for (std::size_t sweep = 0; sweep <= opt_.gibbs_sweeps; ++sweep) {
        std::vector<std::int64_t> d;
        for (std::size_t attempt = 0;; ++attempt) {
            if (sweep == 0 || attempt > 0)
                for (std::size_t j = 0; j < k; ++j)
                    theta_hat[j] = rng.beta(pilot_.params[j].a, pilot_.params[j].b);
            else
                theta_hat = s.theta;
            d = split_counts(theta_hat, rng);
            if (!d.empty() || expanded_.model.num_edges() == 0)
                break;
            if (attempt + 1 >= opt_.max_retries)
                throw NumericError("completion split has zero total probability after " +
                                   std::to_string(opt_.max_retries) + " draws of theta-hat");
        }
        auto pc = parameter_counts<std::int64_t>(expanded_.model, d);
        s.theta.assign(k, 0.0);
        for (std::size_t j = 0; j < k; ++j)
            s.theta[j] = rng.beta(prior_.params[j].a + static_cast<double>(pc.pos[j]),
                                  prior_.params[j].b + static_cast<double>(pc.neg[j]));
        s.expanded_counts = std::move(d);
    }
    return s;
}

std::vector<CompletionSample> CompletionSampler::samples(std::size_t n, std::uint64_t seed) const {
    std::vector<CompletionSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        out.push_back(sample(rng));
    }
    return out;
}

std::vector<std::vector<double>> posterior_samples(const Posterior& p, std::size_t n, std::uint64_t seed) {
    std::vector<std::vector<double>> out(n, std::vector<double>(p.params.size()));
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        for (std::size_t j = 0; j < p.params.size(); ++j)
            out[i][j] = rng.beta(p.params[j].a, p.params[j].b);
    }
    return out;
}

} // namespace pmdpv
